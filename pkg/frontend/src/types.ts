/** Shared data shapes mirroring the engine's JSON schemas. */

export interface IccVector {
  rho0E: number
  rho1E: number
  rho0C: number
  rho1C: number
  rho0EC: number
  rho1EC: number
  rho2EC: number
}

export interface IccBox {
  min: IccVector
  max: IccVector
}

export type DesignFamily = 'crxo' | 'pa' | 'sw' | 'sw-incomplete'

export interface DesignSpec {
  family: DesignFamily
  periods: number
  allocation?: { num: number; den: number }
  sequences?: number
  pattern?: string
}

export interface Economics {
  sigmaE: number
  sigmaC: number
  ceilingRatio: number
  inmb: number
  alpha: number
}

export interface Budget {
  total: number
  clusterCost: number
  individualCost: number
  maxClusters: number
  maxClusterPeriodSize: number
}

/** The run configuration accepted by the service and the CLI. */
export interface RunConfig {
  design: DesignSpec
  economics: Economics
  budget: Budget
  icc?: IccVector
  iccBox?: IccBox
  searchJ?: { from: number; to: number }
  I?: number
  K?: number
  /** Solver option: restrict worst cases to model-realizable ICCs. */
  modelPsd?: boolean
}

export interface DesignSolution {
  I: number
  K: number
  J: number
  variance: number
  power: number
  kind: 'DecimalLOD' | 'IntegerLOD'
  theta?: number
}

export interface LodResult {
  integer: DesignSolution
  decimal: DesignSolution | null
  decimalNote?: string
}

export interface MaximinResult {
  I: number
  K: number
  J: number
  worstCaseRE: number
  worstRho: IccVector
}

export interface SweepRow {
  axis: number
  I: number
  K: number
  power?: number
  re?: number
  decimalI?: number | null
  decimalK?: number | null
  decimalPower?: number | null
}

export interface ApiError {
  code: string
  message: string
  field?: string
  report?: unknown
}

export interface Envelope<T> {
  status: 'ok' | 'error'
  result?: T
  error?: ApiError
  meta: { engineVersion: string; elapsedMs?: number }
}

export const ICC_FIELDS: (keyof IccVector)[] = [
  'rho0E', 'rho1E', 'rho0C', 'rho1C', 'rho0EC', 'rho1EC', 'rho2EC',
]

export const ICC_LABELS: Record<keyof IccVector, string> = {
  rho0E: 'within-period effect ICC',
  rho1E: 'between-period effect ICC',
  rho0C: 'within-period cost ICC',
  rho1C: 'between-period cost ICC',
  rho0EC: 'within-period effect-cost ICC',
  rho1EC: 'between-period effect-cost ICC',
  rho2EC: 'within-individual effect-cost ICC',
}
