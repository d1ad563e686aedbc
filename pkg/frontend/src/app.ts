/**
 * DOM wiring for the design studio.
 *
 * Page layout: a reference row on top (model summary on the left, the
 * seven correlations with their ordering constraints on the right), and
 * a three-column work row below (design/budget inputs, correlation
 * entry, results). Correlation entry switches between single fields
 * (LOD) and min/max pairs (MMD).
 */

import { ApiRequestError, createClient } from './api'
import { sweepCharts } from './charts'
import { describeLod, describeMaximin, sweepTable } from './format'
import {
  ClientValidationError,
  DEFAULT_FORM,
  FormState,
  StudioSession,
  exportConfig,
  sweepGrid,
} from './session'
import { ICC_FIELDS, ICC_LABELS, type IccVector } from './types'
import { checkOrdering } from './validation'

const API_BASE = (window as { CE_LCRT_API?: string }).CE_LCRT_API ?? 'http://127.0.0.1:8750'

export function mountStudio(root: HTMLElement): void {
  const client = createClient(API_BASE)
  const session = new StudioSession(client)
  const form: FormState = structuredClone(DEFAULT_FORM)

  root.innerHTML = `
    <header class="reference-row">
      <section class="panel">
        <h2>Model</h2>
        <p>Effect and cost outcomes are modeled jointly with cluster,
        cluster-period, and individual random components. Designs are
        powered for the incremental net monetary benefit
        <em>ceiling ratio &times; effect difference &minus; cost difference</em>
        under a linear budget: clusters cost <code>c1</code> each and every
        individual in an observed cluster-period costs <code>c2</code>.</p>
        <p>The optimizer returns the budget-feasible design maximizing
        power (known correlations) or the design maximizing worst-case
        relative efficiency over correlation ranges (MaxiMin).</p>
      </section>
      <section class="panel">
        <h2>Correlations</h2>
        <ul id="icc-reference"></ul>
      </section>
    </header>
    <main class="work-row">
      <section class="panel" id="inputs-panel">
        <h2>Design &amp; budget</h2>
        <form id="design-form"></form>
      </section>
      <section class="panel" id="icc-panel">
        <h2>Correlation inputs</h2>
        <div id="icc-entry"></div>
        <div id="icc-errors" class="errors" role="alert"></div>
      </section>
      <section class="panel" id="results-panel">
        <h2>Results</h2>
        <div class="actions">
          <button id="run-button" type="button">Run optimization</button>
          <button id="cancel-button" type="button" hidden>Cancel</button>
          <button id="export-button" type="button">Export config</button>
          <button id="sweep-button" type="button">Run sweep</button>
        </div>
        <div id="status" class="status"></div>
        <div id="results"></div>
        <h3>History</h3>
        <ol id="history"></ol>
      </section>
    </main>
  `

  renderReference()
  renderInputs()
  renderIccEntry()

  const runButton = query<HTMLButtonElement>('#run-button')
  const cancelButton = query<HTMLButtonElement>('#cancel-button')
  const exportButton = query<HTMLButtonElement>('#export-button')
  const sweepButton = query<HTMLButtonElement>('#sweep-button')

  runButton.addEventListener('click', () => void runOptimization())
  cancelButton.addEventListener('click', () => {
    session.cancel()
    setStatus('cancelled')
    setBusy(false)
  })
  exportButton.addEventListener('click', downloadConfig)
  sweepButton.addEventListener('click', () => void runSweep())

  function query<T extends Element>(selector: string): T {
    const node = root.querySelector<T>(selector)
    if (!node) throw new Error(`missing element ${selector}`)
    return node
  }

  function renderReference(): void {
    const list = query<HTMLUListElement>('#icc-reference')
    list.innerHTML = ICC_FIELDS
      .map((f) => `<li><code>${f}</code> &mdash; ${ICC_LABELS[f]}</li>`)
      .join('') +
      '<li class="constraints">ordering: rho1E &le; rho0E; rho1C &le; rho0C; ' +
      'rho0EC &le; min(rho0E, rho0C); rho1EC &le; min(rho1E, rho1C); ' +
      'rho1EC &le; rho0EC &le; rho2EC</li>'
  }

  function field(name: keyof FormState, label: string, step = 'any'): string {
    return `<label>${label}
      <input name="${name}" type="number" step="${step}" value="${form[name]}">
    </label>`
  }

  function renderInputs(): void {
    const el = query<HTMLFormElement>('#design-form')
    el.innerHTML = `
      <label>design family
        <select name="family">
          <option value="crxo">cluster randomized crossover</option>
          <option value="pa">parallel-arm longitudinal</option>
          <option value="sw">stepped wedge</option>
          <option value="sw-incomplete">stepped wedge (staggered windows)</option>
        </select>
      </label>
      <label>optimization
        <select name="mode">
          <option value="lod">locally optimal design</option>
          <option value="mmd">MaxiMin design</option>
        </select>
      </label>
      ${field('periods', 'periods', '1')}
      ${field('allocationNum', 'allocation numerator', '1')}
      ${field('allocationDen', 'allocation denominator', '1')}
      ${field('sequences', 'crossover steps (stepped wedge)', '1')}
      ${field('alpha', 'type I error rate')}
      ${field('inmb', 'target net monetary benefit')}
      ${field('ceilingRatio', 'ceiling ratio')}
      ${field('sigmaE', 'effect standard deviation')}
      ${field('sigmaC', 'cost standard deviation')}
      ${field('budget', 'total budget')}
      ${field('clusterCost', 'cost per cluster')}
      ${field('individualCost', 'cost per individual-period')}
      ${field('maxClusters', 'maximum clusters', '1')}
      ${field('maxClusterPeriodSize', 'maximum cluster-period size', '1')}
      <label class="checkbox"><input type="checkbox" name="modelPsd" checked>
        restrict worst cases to model-realizable correlations</label>
      <label>sweep axis
        <select name="sweepAxis">
          <option value="cac">cluster autocorrelation</option>
          <option value="lambda-r">standardized ceiling ratio</option>
        </select>
      </label>
      ${field('sweepFrom', 'sweep from')}
      ${field('sweepTo', 'sweep to')}
      ${field('sweepCount', 'sweep points', '1')}
    `
    el.querySelector<HTMLSelectElement>('select[name=family]')!.value = form.family
    el.querySelector<HTMLSelectElement>('select[name=mode]')!.value = form.mode
    el.addEventListener('input', onInputChange)
  }

  function onInputChange(event: Event): void {
    const target = event.target as HTMLInputElement | HTMLSelectElement
    const name = target.name as keyof FormState
    if (name === 'family' || name === 'mode' || name === 'sweepAxis') {
      ;(form as unknown as Record<string, unknown>)[name] = target.value
      if (name === 'mode') renderIccEntry()
      return
    }
    if (name === 'modelPsd') {
      form.modelPsd = (target as HTMLInputElement).checked
      return
    }
    const value = Number(target.value)
    if (Number.isFinite(value)) {
      ;(form as unknown as Record<string, unknown>)[name] = value
    }
    refreshInlineIccState()
  }

  function renderIccEntry(): void {
    const el = query<HTMLDivElement>('#icc-entry')
    if (form.mode === 'lod') {
      el.innerHTML = ICC_FIELDS.map((f) => `
        <label data-field="${f}">${ICC_LABELS[f]}
          <input data-icc="point" name="${f}" type="number" step="any"
                 value="${form.icc[f]}">
        </label>`).join('')
    } else {
      el.innerHTML = ICC_FIELDS.map((f) => `
        <fieldset data-field="${f}"><legend>${ICC_LABELS[f]}</legend>
          <label>min <input data-icc="min" name="${f}" type="number" step="any"
                            value="${form.iccMin[f]}"></label>
          <label>max <input data-icc="max" name="${f}" type="number" step="any"
                            value="${form.iccMax[f]}"></label>
        </fieldset>`).join('')
    }
    el.addEventListener('input', (event) => {
      const target = event.target as HTMLInputElement
      const fieldName = target.name as keyof IccVector
      const value = Number(target.value)
      if (!Number.isFinite(value)) return
      if (target.dataset.icc === 'max') {
        form.iccMax[fieldName] = value
      } else if (target.dataset.icc === 'min') {
        form.iccMin[fieldName] = value
      } else {
        form.icc[fieldName] = value
      }
      refreshInlineIccState()
    })
  }

  function refreshInlineIccState(): void {
    const checks = checkOrdering(form.icc)
    const errors = checks.filter((c) => !c.ok).map((c) => `${c.id} ${c.text}`)
    query<HTMLDivElement>('#icc-errors').textContent = errors.join('; ')
  }

  function setStatus(text: string, retryable = false): void {
    const el = query<HTMLDivElement>('#status')
    el.textContent = text
    el.classList.toggle('retryable', retryable)
  }

  function setBusy(busy: boolean): void {
    runButton.disabled = busy
    sweepButton.disabled = busy
    cancelButton.hidden = !busy
  }

  async function runOptimization(): Promise<void> {
    setStatus('')
    setBusy(true)
    try {
      if (form.mode === 'lod') {
        const result = await session.submitLod(form)
        renderLines(describeLod(result).flatMap((s) =>
          [`<h3>${s.heading}</h3>`, `<p>${s.design}</p>`, `<p>${s.power}</p>`, `<p>${s.variance}</p>`]))
      } else {
        const result = await session.submitMmd(form)
        const lines = describeMaximin(result)
        renderLines([
          `<h3>${lines.heading}</h3>`, `<p>${lines.design}</p>`, `<p>${lines.efficiency}</p>`,
          '<h4>worst-case correlations</h4>',
          '<table>' + lines.worstCase
            .map((w) => `<tr><td>${w.label}</td><td>${w.value}</td></tr>`).join('') + '</table>',
        ])
      }
      renderHistory()
    } catch (error) {
      reportError(error)
    } finally {
      setBusy(false)
    }
  }

  async function runSweep(): Promise<void> {
    setStatus('')
    setBusy(true)
    try {
      const grid = sweepGrid(form.sweepFrom, form.sweepTo, form.sweepCount)
      const rows = await session.runSweep(form, form.sweepAxis, grid)
      const table = sweepTable(rows)
      renderLines([
        ...sweepCharts(rows, form.sweepAxis),
        '<table>' + table.map((r, i) =>
          `<tr>${r.map((c) => (i === 0 ? `<th>${c}</th>` : `<td>${c}</td>`)).join('')}</tr>`).join('') +
          '</table>',
      ])
      renderHistory()
    } catch (error) {
      reportError(error)
    } finally {
      setBusy(false)
    }
  }

  function reportError(error: unknown): void {
    if (error instanceof ClientValidationError) {
      setStatus(`fix before running: ${error.issues.join('; ')}`)
    } else if (error instanceof ApiRequestError) {
      setStatus(`service error [${error.code}]: ${error.message}`, true)
    } else if ((error as Error)?.name === 'AbortError') {
      setStatus('cancelled')
    } else {
      setStatus(`network error: ${(error as Error)?.message ?? error}`, true)
    }
  }

  function renderLines(chunks: string[]): void {
    query<HTMLDivElement>('#results').innerHTML = chunks.join('')
  }

  function renderHistory(): void {
    const el = query<HTMLOListElement>('#history')
    el.innerHTML = session.history
      .map((h) => `<li>${h.at} &mdash; ${h.kind}</li>`)
      .join('')
  }

  function downloadConfig(): void {
    const payload = exportConfig(form)
    const blob = new Blob([payload], { type: 'application/json' })
    const anchor = document.createElement('a')
    anchor.href = URL.createObjectURL(blob)
    anchor.download = 'ce-lcrt-config.json'
    anchor.click()
    URL.revokeObjectURL(anchor.href)
    setStatus('configuration exported; rerun it with: ce-lcrt lod --config ce-lcrt-config.json'
      + (form.mode === 'mmd' ? ' (use the mmd command, adding --model-psd if checked)' : ''))
  }
}

if (typeof document !== 'undefined' && document.getElementById('studio-root')) {
  mountStudio(document.getElementById('studio-root') as HTMLElement)
}
