/** Thin fetch client for the design-engine service. */

import type {
  Envelope,
  LodResult,
  MaximinResult,
  RunConfig,
  SweepRow,
} from './types'

export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly field?: string,
    public readonly report?: unknown,
  ) {
    super(message)
  }
}

export interface EngineClient {
  lod(config: RunConfig, signal?: AbortSignal): Promise<LodResult>
  mmd(config: RunConfig, signal?: AbortSignal): Promise<MaximinResult>
  sweep(config: RunConfig, axis: string, grid: number[], signal?: AbortSignal): Promise<SweepRow[]>
  health(): Promise<{ status: string; version: string }>
}

async function unwrap<T>(response: Response): Promise<T> {
  let body: Envelope<T>
  try {
    body = (await response.json()) as Envelope<T>
  } catch {
    throw new ApiRequestError('BAD_RESPONSE', `service returned ${response.status}`)
  }
  if (body.status !== 'ok' || body.result === undefined) {
    const error = body.error ?? { code: 'UNKNOWN', message: 'unknown service error' }
    throw new ApiRequestError(error.code, error.message, error.field, error.report)
  }
  return body.result
}

export function createClient(baseUrl: string, fetchImpl: typeof fetch = fetch): EngineClient {
  const post = async <T>(path: string, payload: unknown, signal?: AbortSignal): Promise<T> => {
    const response = await fetchImpl(`${baseUrl}${path}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
      signal,
    })
    return unwrap<T>(response)
  }
  return {
    lod: (config, signal) => post<LodResult>('/api/v1/lod', config, signal),
    mmd: (config, signal) => post<MaximinResult>('/api/v1/mmd', config, signal),
    sweep: (config, axis, grid, signal) =>
      post<SweepRow[]>('/api/v1/sweep', { ...config, axis, grid }, signal),
    health: async () => {
      const response = await fetchImpl(`${baseUrl}/api/v1/health`)
      return unwrap<{ status: string; version: string }>(response)
    },
  }
}
