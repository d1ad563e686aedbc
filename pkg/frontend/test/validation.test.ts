/**
 * The client-side validator must classify the shared corpus exactly as
 * the engine does; the corpus file is generated server-side and pins
 * both implementations to one contract.
 */

import { readFileSync } from 'node:fs'
import { describe, expect, it } from 'vitest'

import type { IccVector } from '../src/types'
import { minEigenvalue, validateBox, validateIcc } from '../src/validation'

interface Vector {
  icc: IccVector
  J: number
  K: number
  expect: {
    orderingOk: boolean
    violated: string[]
    positiveDefinite: boolean | null
    valid: boolean
  }
}

const corpus: { vectors: Vector[] } = JSON.parse(
  readFileSync(new URL('../../shared/icc-test-vectors.json', import.meta.url), 'utf-8'),
)

describe('shared validation corpus', () => {
  it('has at least 50 valid and 50 invalid vectors', () => {
    const valid = corpus.vectors.filter((v) => v.expect.valid)
    expect(valid.length).toBeGreaterThanOrEqual(50)
    expect(corpus.vectors.length - valid.length).toBeGreaterThanOrEqual(50)
  })

  it('classifies every vector exactly like the engine', () => {
    for (const vector of corpus.vectors) {
      const report = validateIcc(vector.icc, vector.J, vector.K)
      expect(report.orderingOk, JSON.stringify(vector)).toBe(vector.expect.orderingOk)
      expect(report.valid, JSON.stringify(vector)).toBe(vector.expect.valid)
      expect(report.positiveDefinite).toBe(vector.expect.positiveDefinite)
      expect(report.violated).toEqual(vector.expect.violated)
    }
  })
})

describe('validateIcc details', () => {
  const base: IccVector = {
    rho0E: 0.05, rho1E: 0.025, rho0C: 0.05, rho1C: 0.025,
    rho0EC: 0.02, rho1EC: 0.01, rho2EC: 0.5,
  }

  it('accepts the benchmark scenario', () => {
    const report = validateIcc(base, 2, 14)
    expect(report.valid).toBe(true)
    expect(report.minEigenvalue).toBeGreaterThan(0)
  })

  it('flags constraint (i) when between-period exceeds within-period', () => {
    const report = validateIcc({ ...base, rho1E: 0.06 }, 2, 14)
    expect(report.valid).toBe(false)
    expect(report.constraints.find((c) => c.id === '(i)')?.ok).toBe(false)
  })

  it('gates on eigenvalues even when ordering passes', () => {
    const rho: IccVector = {
      rho0E: 0.1, rho1E: 0, rho0C: 0.1, rho1C: 0,
      rho0EC: 0, rho1EC: 0, rho2EC: 0.9999,
    }
    const report = validateIcc(rho, 3, 2)
    expect(report.orderingOk).toBe(true)
    expect(report.valid).toBe(false)
    expect(report.minEigenvalue).toBeLessThan(0)
  })

  it('eigenvalue formula matches a hand computation', () => {
    // all-zero correlations give the identity matrix
    const zero: IccVector = {
      rho0E: 0, rho1E: 0, rho0C: 0, rho1C: 0, rho0EC: 0, rho1EC: 0, rho2EC: 0,
    }
    expect(minEigenvalue(zero, 4, 7)).toBeCloseTo(1, 12)
  })

  it('validates boxes corner-wise and rejects reversed bounds', () => {
    const box = { min: base, max: { ...base, rho0E: 0.04 } }
    const report = validateBox(box, 2, 14)
    expect(report.valid).toBe(false)
    expect(report.issues[0]).toContain('rho0E')
  })
})
