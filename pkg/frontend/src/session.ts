/**
 * Studio session state: the current form, an append-only history of
 * request/response pairs, and the single in-flight optimization.
 *
 * All submission paths validate client-side first (the mirror of the
 * server rules); a request is only sent when the mirror passes, so a
 * constraint violation renders inline without any network traffic.
 */

import type { EngineClient } from './api'
import type {
  DesignFamily,
  IccBox,
  IccVector,
  LodResult,
  MaximinResult,
  RunConfig,
  SweepRow,
} from './types'
import { validateBox, validateIcc } from './validation'

export type Mode = 'lod' | 'mmd'

export interface FormState {
  family: DesignFamily
  periods: number
  allocationNum: number
  allocationDen: number
  sequences: number
  mode: Mode
  sigmaE: number
  sigmaC: number
  ceilingRatio: number
  inmb: number
  alpha: number
  budget: number
  clusterCost: number
  individualCost: number
  maxClusters: number
  maxClusterPeriodSize: number
  icc: IccVector
  iccMin: IccVector
  iccMax: IccVector
  /** MMD option: restrict worst cases to model-realizable ICCs. */
  modelPsd: boolean
  sweepAxis: 'cac' | 'lambda-r'
  sweepFrom: number
  sweepTo: number
  sweepCount: number
}

export const DEFAULT_FORM: FormState = {
  family: 'crxo',
  periods: 8,
  allocationNum: 1,
  allocationDen: 2,
  sequences: 7,
  mode: 'lod',
  sigmaE: 6.48,
  sigmaC: 11635,
  ceilingRatio: 216,
  inmb: 2089,
  alpha: 0.05,
  budget: 600000,
  clusterCost: 3000,
  individualCost: 250,
  maxClusters: 100,
  maxClusterPeriodSize: 200,
  icc: { rho0E: 0.048, rho1E: 0.042, rho0C: 0.02, rho1C: 0.018,
         rho0EC: 0.007, rho1EC: 0.004, rho2EC: 0.75 },
  iccMin: { rho0E: 0.048, rho1E: 0.042, rho0C: 0.02, rho1C: 0.018,
            rho0EC: 0.0, rho1EC: 0.0, rho2EC: 0.5 },
  iccMax: { rho0E: 0.048, rho1E: 0.042, rho0C: 0.02, rho1C: 0.018,
            rho0EC: 0.01, rho1EC: 0.005, rho2EC: 0.8 },
  modelPsd: true,
  sweepAxis: 'cac',
  sweepFrom: 0.1,
  sweepTo: 0.8,
  sweepCount: 8,
}

export interface HistoryEntry {
  readonly kind: 'lod' | 'mmd' | 'sweep'
  readonly config: RunConfig
  readonly result: LodResult | MaximinResult | SweepRow[]
  readonly at: string
}

export interface ValidationFailure {
  ok: false
  issues: string[]
}

/** A representative K for the eigenvalue gate before a size is known. */
function referenceK(form: FormState): number {
  return Math.max(2, Math.min(form.maxClusterPeriodSize, 20))
}

export function buildConfig(form: FormState): RunConfig {
  const design: RunConfig['design'] = { family: form.family, periods: form.periods }
  if (form.family === 'crxo' || form.family === 'pa') {
    design.allocation = { num: form.allocationNum, den: form.allocationDen }
  } else {
    design.sequences = form.sequences
  }
  const config: RunConfig = {
    design,
    economics: {
      sigmaE: form.sigmaE, sigmaC: form.sigmaC, ceilingRatio: form.ceilingRatio,
      inmb: form.inmb, alpha: form.alpha,
    },
    budget: {
      total: form.budget, clusterCost: form.clusterCost,
      individualCost: form.individualCost, maxClusters: form.maxClusters,
      maxClusterPeriodSize: form.maxClusterPeriodSize,
    },
  }
  if (form.mode === 'lod') {
    config.icc = { ...form.icc }
  } else {
    config.iccBox = { min: { ...form.iccMin }, max: { ...form.iccMax } }
    config.modelPsd = form.modelPsd
  }
  return config
}

export function validateForm(form: FormState): ValidationFailure | { ok: true } {
  const issues: string[] = []
  if (form.family === 'crxo' && form.periods % 2 !== 0) {
    issues.push('crossover designs need an even number of periods')
  }
  if (form.family === 'sw' && form.periods < form.sequences + 1) {
    issues.push('stepped wedge designs need at least one more period than steps')
  }
  if (form.sigmaE <= 0 || form.sigmaC <= 0) issues.push('standard deviations must be positive')
  if (form.budget <= 0 || form.clusterCost <= 0 || form.individualCost <= 0) {
    issues.push('budget and unit costs must be positive')
  }
  if (form.alpha <= 0 || form.alpha >= 1) issues.push('alpha must lie strictly between 0 and 1')
  const K = referenceK(form)
  if (form.mode === 'lod') {
    const report = validateIcc(form.icc, form.periods, K)
    if (!report.valid) {
      issues.push(...report.rangeIssues)
      issues.push(...report.constraints.filter((c) => !c.ok).map((c) => `constraint ${c.id}: ${c.text}`))
      if (report.positiveDefinite === false) {
        issues.push('correlation matrix is not positive definite')
      }
    }
  } else {
    const box: IccBox = { min: form.iccMin, max: form.iccMax }
    const report = validateBox(box, form.periods, K)
    if (!report.valid) {
      issues.push(...report.issues)
      for (const [corner, rep] of [['lower', report.min], ['upper', report.max]] as const) {
        if (!rep.valid) {
          issues.push(...rep.rangeIssues.map((m) => `${corner} bound: ${m}`))
          issues.push(...rep.constraints.filter((c) => !c.ok)
            .map((c) => `${corner} bound violates ${c.id}`))
          if (rep.positiveDefinite === false) {
            issues.push(`${corner} bound gives a non-positive-definite correlation matrix`)
          }
        }
      }
    }
  }
  return issues.length > 0 ? { ok: false, issues } : { ok: true }
}

/** Canonical export: the same JSON the CLI --config flag accepts. */
export function exportConfig(form: FormState): string {
  return JSON.stringify(buildConfig(form), null, 2) + '\n'
}

export class StudioSession {
  private readonly entries: HistoryEntry[] = []
  private inflight: AbortController | null = null

  constructor(private readonly client: EngineClient) {}

  get history(): readonly HistoryEntry[] {
    return [...this.entries]
  }

  get busy(): boolean {
    return this.inflight !== null
  }

  cancel(): void {
    this.inflight?.abort()
    this.inflight = null
  }

  private begin(): AbortSignal {
    if (this.inflight) {
      throw new Error('an optimization is already running; cancel it first')
    }
    this.inflight = new AbortController()
    return this.inflight.signal
  }

  private finish(): void {
    this.inflight = null
  }

  private record(entry: HistoryEntry): void {
    this.entries.push(Object.freeze(entry))
  }

  async submitLod(form: FormState): Promise<LodResult> {
    const verdict = validateForm({ ...form, mode: 'lod' })
    if (!verdict.ok) throw new ClientValidationError(verdict.issues)
    const config = buildConfig({ ...form, mode: 'lod' })
    const signal = this.begin()
    try {
      const result = await this.client.lod(config, signal)
      this.record({ kind: 'lod', config, result, at: new Date().toISOString() })
      return result
    } finally {
      this.finish()
    }
  }

  async submitMmd(form: FormState): Promise<MaximinResult> {
    const verdict = validateForm({ ...form, mode: 'mmd' })
    if (!verdict.ok) throw new ClientValidationError(verdict.issues)
    const config = buildConfig({ ...form, mode: 'mmd' })
    const signal = this.begin()
    try {
      const result = await this.client.mmd(config, signal)
      this.record({ kind: 'mmd', config, result, at: new Date().toISOString() })
      return result
    } finally {
      this.finish()
    }
  }

  async runSweep(form: FormState, axis: string, grid: number[]): Promise<SweepRow[]> {
    const verdict = validateForm({ ...form, mode: axis === 'rho1e-max' ? 'mmd' : 'lod' })
    if (!verdict.ok) throw new ClientValidationError(verdict.issues)
    const config = buildConfig({ ...form, mode: axis === 'rho1e-max' ? 'mmd' : 'lod' })
    const signal = this.begin()
    try {
      const result = await this.client.sweep(config, axis, grid, signal)
      this.record({ kind: 'sweep', config, result, at: new Date().toISOString() })
      return result
    } finally {
      this.finish()
    }
  }
}

export class ClientValidationError extends Error {
  constructor(public readonly issues: string[]) {
    super(issues.join('; '))
  }
}

export function sweepGrid(from: number, to: number, count: number): number[] {
  if (count <= 1) return [from]
  const step = (to - from) / (count - 1)
  return Array.from({ length: count }, (_, i) => from + i * step)
}
