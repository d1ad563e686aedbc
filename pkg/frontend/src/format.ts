/**
 * Result renderers. Values from the service are displayed verbatim
 * (rounded only for presentation); the client never recomputes variance
 * or power on its own.
 */

import type { DesignSolution, LodResult, MaximinResult, SweepRow } from './types'
import { ICC_FIELDS, ICC_LABELS, type IccVector } from './types'

export function formatPower(power: number): string {
  return power.toFixed(3)
}

export function formatDesign(I: number, K: number): string {
  const round = (x: number) => (Number.isInteger(x) ? String(x) : x.toFixed(2))
  return `${round(I)} clusters × ${round(K)} per cluster-period`
}

export interface SolutionLines {
  heading: string
  design: string
  power: string
  variance: string
}

export function describeSolution(solution: DesignSolution, heading: string): SolutionLines {
  return {
    heading,
    design: formatDesign(solution.I, solution.K),
    power: `power ${formatPower(solution.power)}`,
    variance: `estimator variance ${solution.variance.toPrecision(6)}`,
  }
}

export function describeLod(result: LodResult): SolutionLines[] {
  const lines = [describeSolution(result.integer, 'Integer optimal design')]
  if (result.decimal) {
    lines.push(describeSolution(result.decimal, 'Decimal (continuous) benchmark'))
  }
  return lines
}

export interface MaximinLines {
  heading: string
  design: string
  efficiency: string
  worstCase: { label: string; value: string }[]
}

export function describeMaximin(result: MaximinResult): MaximinLines {
  return {
    heading: 'MaxiMin design',
    design: formatDesign(result.I, result.K),
    efficiency: `worst-case relative efficiency ${result.worstCaseRE.toFixed(3)}`,
    worstCase: ICC_FIELDS.map((field) => ({
      label: ICC_LABELS[field],
      value: result.worstRho[field as keyof IccVector].toFixed(4),
    })),
  }
}

export function sweepTable(rows: SweepRow[]): string[][] {
  const header = ['axis', 'I', 'K', rows.some((r) => r.re !== undefined) ? 'RE' : 'power']
  const body = rows.map((r) => [
    String(r.axis),
    String(r.I),
    String(r.K),
    r.re !== undefined ? r.re.toFixed(3) : formatPower(r.power ?? NaN),
  ])
  return [header, ...body]
}
