/**
 * Tutorial parity and session behavior, driven against recorded engine
 * fixtures: the studio must display the reference LOD (8, 36)/0.996 and
 * MaxiMin (8, 36)/RE 0.991 results, never recomputing values itself,
 * and must not send requests that fail client-side validation.
 */

import { readFileSync } from 'node:fs'
import { describe, expect, it, vi } from 'vitest'

import type { EngineClient } from '../src/api'
import { describeLod, describeMaximin } from '../src/format'
import {
  ClientValidationError,
  DEFAULT_FORM,
  StudioSession,
  buildConfig,
  exportConfig,
  sweepGrid,
} from '../src/session'
import type { LodResult, MaximinResult, RunConfig, SweepRow } from '../src/types'

const lodFixture = JSON.parse(readFileSync(
  new URL('./fixtures/tutorial-lod.json', import.meta.url), 'utf-8'))
const mmdFixture = JSON.parse(readFileSync(
  new URL('./fixtures/tutorial-mmd.json', import.meta.url), 'utf-8'))

function clientReturning(partial: Partial<EngineClient>): EngineClient {
  return {
    lod: vi.fn().mockRejectedValue(new Error('unexpected lod call')),
    mmd: vi.fn().mockRejectedValue(new Error('unexpected mmd call')),
    sweep: vi.fn().mockRejectedValue(new Error('unexpected sweep call')),
    health: vi.fn().mockResolvedValue({ status: 'ok', version: 'test' }),
    ...partial,
  }
}

describe('tutorial parity', () => {
  it('builds exactly the recorded tutorial LOD configuration', () => {
    const config = buildConfig({ ...DEFAULT_FORM, mode: 'lod' })
    expect(config).toEqual(lodFixture.config)
  })

  it('builds exactly the recorded tutorial MaxiMin configuration', () => {
    const config = buildConfig({ ...DEFAULT_FORM, mode: 'mmd' })
    expect(config).toEqual(mmdFixture.config)
  })

  it('displays the tutorial LOD result verbatim: (8, 36) and power 0.996', async () => {
    const client = clientReturning({
      lod: vi.fn().mockResolvedValue(lodFixture.result as LodResult),
    })
    const session = new StudioSession(client)
    const result = await session.submitLod({ ...DEFAULT_FORM, mode: 'lod' })
    const lines = describeLod(result)
    expect(lines[0].design).toContain('8 clusters')
    expect(lines[0].design).toContain('36 per cluster-period')
    expect(lines[0].power).toContain('0.996')
    expect(session.history).toHaveLength(1)
  })

  it('displays the tutorial MaxiMin result verbatim: (8, 36) and RE 0.991', async () => {
    const client = clientReturning({
      mmd: vi.fn().mockResolvedValue(mmdFixture.result as MaximinResult),
    })
    const session = new StudioSession(client)
    const result = await session.submitMmd({ ...DEFAULT_FORM, mode: 'mmd' })
    const lines = describeMaximin(result)
    expect(lines.design).toContain('8 clusters')
    expect(lines.efficiency).toContain('0.991')
    expect(lines.worstCase).toHaveLength(7)
  })

  it('exported configuration parses back to the submitted one', () => {
    const exported = exportConfig({ ...DEFAULT_FORM, mode: 'mmd' })
    const parsed = JSON.parse(exported) as RunConfig
    expect(parsed).toEqual(buildConfig({ ...DEFAULT_FORM, mode: 'mmd' }))
    expect(parsed.modelPsd).toBe(true)
  })
})

describe('session behavior', () => {
  it('rejects constraint violations without sending a request', async () => {
    const lod = vi.fn()
    const session = new StudioSession(clientReturning({ lod }))
    const bad = {
      ...DEFAULT_FORM,
      icc: { ...DEFAULT_FORM.icc, rho1E: DEFAULT_FORM.icc.rho0E + 0.01 },
    }
    await expect(session.submitLod(bad)).rejects.toBeInstanceOf(ClientValidationError)
    expect(lod).not.toHaveBeenCalled()
    expect(session.history).toHaveLength(0)
  })

  it('equal min and max boxes submit a degenerate MaxiMin box', () => {
    const form = {
      ...DEFAULT_FORM,
      iccMin: { ...DEFAULT_FORM.icc },
      iccMax: { ...DEFAULT_FORM.icc },
      mode: 'mmd' as const,
    }
    const config = buildConfig(form)
    expect(config.iccBox?.min).toEqual(config.iccBox?.max)
  })

  it('allows only one in-flight optimization', async () => {
    let resolveCall: (value: LodResult) => void = () => undefined
    const pending = new Promise<LodResult>((resolve) => { resolveCall = resolve })
    const session = new StudioSession(clientReturning({
      lod: vi.fn().mockReturnValue(pending),
    }))
    const first = session.submitLod({ ...DEFAULT_FORM, mode: 'lod' })
    expect(session.busy).toBe(true)
    await expect(session.submitLod({ ...DEFAULT_FORM, mode: 'lod' }))
      .rejects.toThrow(/already running/)
    resolveCall(lodFixture.result as LodResult)
    await first
    expect(session.busy).toBe(false)
  })

  it('history is append-only and frozen', async () => {
    const session = new StudioSession(clientReturning({
      lod: vi.fn().mockResolvedValue(lodFixture.result as LodResult),
    }))
    await session.submitLod({ ...DEFAULT_FORM, mode: 'lod' })
    const entry = session.history[0]
    expect(Object.isFrozen(entry)).toBe(true)
    expect(() => {
      ;(session.history as unknown[]).pop()
    }).not.toThrow()
    // mutating the returned view must not affect the session's record
    expect(session.history).toHaveLength(1)
  })

  it('sweep grids are inclusive and evenly spaced', () => {
    expect(sweepGrid(0.1, 0.8, 8)).toHaveLength(8)
    expect(sweepGrid(0.1, 0.8, 8)[0]).toBeCloseTo(0.1)
    expect(sweepGrid(0.1, 0.8, 8)[7]).toBeCloseTo(0.8)
    expect(sweepGrid(0.5, 0.5, 1)).toEqual([0.5])
  })

  it('records sweep requests in history', async () => {
    const rows: SweepRow[] = [{ axis: 0.5, I: 30, K: 7, power: 0.79 }]
    const session = new StudioSession(clientReturning({
      sweep: vi.fn().mockResolvedValue(rows),
    }))
    const result = await session.runSweep({ ...DEFAULT_FORM, family: 'sw' }, 'cac', [0.5])
    expect(result).toEqual(rows)
    expect(session.history[0].kind).toBe('sweep')
  })
})
