/**
 * Client-side mirror of the server's ICC validation: range bounds, the
 * five ordering constraints, and the closed-form eigenvalue gate. The
 * rules are pinned to the server by a shared test-vector corpus; any
 * divergence is a test failure, not a UX nicety.
 */

import type { IccBox, IccVector } from './types'
import { ICC_FIELDS } from './types'

/** An eigenvalue counts as strictly positive only above this tolerance. */
export const PD_TOL = 1e-10

export interface ConstraintCheck {
  id: '(i)' | '(ii)' | '(iii)' | '(iv)' | '(v)'
  ok: boolean
  text: string
}

export interface ValidationReport {
  rangeOk: boolean
  rangeIssues: string[]
  constraints: ConstraintCheck[]
  orderingOk: boolean
  /** null when range checks fail (eigenvalues are meaningless then) */
  minEigenvalue: number | null
  positiveDefinite: boolean | null
  valid: boolean
  violated: string[]
}

export function checkRanges(rho: IccVector): string[] {
  const issues: string[] = []
  for (const name of ['rho0E', 'rho1E', 'rho0C', 'rho1C'] as const) {
    const x = rho[name]
    if (!Number.isFinite(x) || x < 0 || x >= 1) {
      issues.push(`${name} must lie in [0, 1)`)
    }
  }
  for (const name of ['rho0EC', 'rho1EC', 'rho2EC'] as const) {
    const x = rho[name]
    if (!Number.isFinite(x) || x <= -1 || x >= 1) {
      issues.push(`${name} must lie in (-1, 1)`)
    }
  }
  return issues
}

export function checkOrdering(rho: IccVector): ConstraintCheck[] {
  return [
    { id: '(i)', ok: rho.rho1E <= rho.rho0E, text: 'rho1E ≤ rho0E' },
    { id: '(ii)', ok: rho.rho1C <= rho.rho0C, text: 'rho1C ≤ rho0C' },
    {
      id: '(iii)',
      ok: rho.rho0EC <= Math.min(rho.rho0E, rho.rho0C),
      text: 'rho0EC ≤ min(rho0E, rho0C)',
    },
    {
      id: '(iv)',
      ok: rho.rho1EC <= Math.min(rho.rho1E, rho.rho1C),
      text: 'rho1EC ≤ min(rho1E, rho1C)',
    },
    {
      id: '(v)',
      ok: rho.rho1EC <= rho.rho0EC && rho.rho0EC <= rho.rho2EC,
      text: 'rho1EC ≤ rho0EC ≤ rho2EC',
    },
  ]
}

/**
 * The six closed-form eigenvalues of the within-cluster correlation
 * matrix (plus/minus per nesting level), matching the engine kernels.
 */
export function eigenValues(rho: IccVector, J: number, K: number): number[] {
  const ke = 1 + (K - 1) * rho.rho0E - K * rho.rho1E
  const kc = 1 + (K - 1) * rho.rho0C - K * rho.rho1C
  const kec = rho.rho2EC + (K - 1) * rho.rho0EC - K * rho.rho1EC

  const m1 = 0.5 * (2 + (K - 1) * (rho.rho0E + rho.rho0C) + (J - 1) * K * (rho.rho1E + rho.rho1C))
  const a1 = (K - 1) * (rho.rho0E - rho.rho0C) + (J - 1) * K * (rho.rho1E - rho.rho1C)
  const b1 = rho.rho2EC + (K - 1) * rho.rho0EC + (J - 1) * K * rho.rho1EC
  const s1 = 0.5 * Math.sqrt(a1 * a1 + 4 * b1 * b1)

  const m2 = 0.5 * (ke + kc)
  const s2 = 0.5 * Math.sqrt((ke - kc) * (ke - kc) + 4 * kec * kec)

  const m3 = 0.5 * (2 - rho.rho0E - rho.rho0C)
  const d3 = rho.rho2EC - rho.rho0EC
  const s3 = 0.5 * Math.sqrt((rho.rho0E - rho.rho0C) * (rho.rho0E - rho.rho0C) + 4 * d3 * d3)

  return [m1 + s1, m1 - s1, m2 + s2, m2 - s2, m3 + s3, m3 - s3]
}

/** Smallest eigenvalue among those with positive multiplicity. */
export function minEigenvalue(rho: IccVector, J: number, K: number): number {
  const values = eigenValues(rho, J, K)
  let smallest = values[1]
  if (J > 1 && values[3] < smallest) smallest = values[3]
  if (K > 1 && values[5] < smallest) smallest = values[5]
  return smallest
}

export function validateIcc(rho: IccVector, J: number, K: number): ValidationReport {
  const rangeIssues = checkRanges(rho)
  const rangeOk = rangeIssues.length === 0
  const constraints = checkOrdering(rho)
  const orderingOk = rangeOk && constraints.every((c) => c.ok)
  const violated: string[] = []
  if (!rangeOk) violated.push('range')
  for (const c of constraints) {
    if (rangeOk && !c.ok) violated.push(c.id)
  }
  let minEig: number | null = null
  let pd: boolean | null = null
  if (orderingOk) {
    minEig = minEigenvalue(rho, J, K)
    pd = minEig > PD_TOL
  }
  return {
    rangeOk,
    rangeIssues,
    constraints,
    orderingOk,
    minEigenvalue: minEig,
    positiveDefinite: pd,
    valid: orderingOk && pd === true,
    violated: violated.sort(),
  }
}

/** Box validation: both corners must be admissible and ordered. */
export function validateBox(box: IccBox, J: number, K: number): {
  valid: boolean
  issues: string[]
  min: ValidationReport
  max: ValidationReport
} {
  const issues: string[] = []
  for (const field of ICC_FIELDS) {
    if (box.min[field] > box.max[field]) {
      issues.push(`${field}: lower bound exceeds upper bound`)
    }
  }
  const lo = validateIcc(box.min, J, K)
  const hi = validateIcc(box.max, J, K)
  return { valid: issues.length === 0 && lo.valid && hi.valid, issues, min: lo, max: hi }
}
