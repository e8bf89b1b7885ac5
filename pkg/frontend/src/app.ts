// Operator console: renders session state, collects measured values,
// advances cycles. All numbers shown come straight from the service
// payloads; each rendered field also carries the exact value in a
// data-value attribute (display text is rounded for readability).

import { ApiError, SessionApi } from './api.js'
import { drawCostHistory, drawDecisionScatter } from './charts.js'
import type { CertificateView, CycleReportView, SessionView } from './types.js'

export interface ConsoleOptions {
  chartsEnabled?: boolean
}

const TEMPLATE = `
  <div id="status-line" class="status"></div>
  <div id="error-line" class="error" hidden></div>
  <section id="suggestion-panel">
    <h2>Suggested experiment</h2>
    <div id="suggestion-body"></div>
    <button id="advance-cycle" disabled>Advance cycle</button>
  </section>
  <section id="measurement-panel">
    <h2>Measured values</h2>
    <form id="measurement-form">
      <label>cost &phi;&#770; <input id="phi-input" name="phi" autocomplete="off"></label>
      <span id="g-inputs"></span>
      <button id="submit-measurement" type="submit">Submit</button>
      <div id="form-error" class="error" hidden></div>
    </form>
  </section>
  <section id="safety-panel">
    <h2>Safety certificate</h2>
    <div id="certificate-body"></div>
  </section>
  <section id="report-panel">
    <h2>Last cycle report</h2>
    <div id="report-body"></div>
  </section>
  <section id="charts-panel">
    <h2>Campaign</h2>
    <canvas id="decision-chart" width="360" height="300"></canvas>
    <canvas id="cost-chart" width="360" height="200"></canvas>
  </section>
`

function fmt(x: number): string {
  return Math.abs(x) >= 1e-3 || x === 0 ? x.toPrecision(6) : x.toExponential(4)
}

function valueSpan(field: string, value: number | boolean | string): string {
  const exact = String(value)
  const text = typeof value === 'number' ? fmt(value) : exact
  return `<span class="value" data-field="${field}" data-value="${exact}">${text}</span>`
}

function vector(field: string, values: number[]): string {
  return values.map((v, i) => valueSpan(`${field}.${i}`, v)).join(', ')
}

export class ConsoleApp {
  private view: SessionView | null = null
  private busy = false

  constructor(
    private readonly root: HTMLElement,
    private readonly api: SessionApi,
    readonly sessionId: string,
    private readonly opts: ConsoleOptions = {},
  ) {
    root.innerHTML = TEMPLATE
    const form = this.el<HTMLFormElement>('#measurement-form')
    form.addEventListener('submit', (ev) => {
      ev.preventDefault()
      void this.submitMeasurement()
    })
    this.el<HTMLButtonElement>('#advance-cycle').addEventListener('click', () => {
      void this.advanceCycle()
    })
  }

  el<T extends HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector)
    if (!found) throw new Error(`missing element ${selector}`)
    return found as T
  }

  async refresh(): Promise<void> {
    try {
      this.view = await this.api.getSession(this.sessionId)
      this.showError(null)
    } catch (err) {
      this.showError(err)
      return
    }
    this.render()
  }

  private showError(err: unknown): void {
    const line = this.el<HTMLDivElement>('#error-line')
    if (err === null) {
      line.hidden = true
      line.textContent = ''
      return
    }
    line.hidden = false
    line.textContent = err instanceof Error ? err.message : String(err)
  }

  render(): void {
    const view = this.view
    if (!view) return
    this.el('#status-line').textContent =
      `session ${view.session_id} | state ${view.state} | cycle ${view.k}` +
      ` / ${view.config.max_cycles ?? '?'} | delta_e ${fmt(view.delta_e)}` +
      ` | noise scale ${fmt(view.noise_scale)}`

    this.renderSuggestion(view)
    this.renderForm(view)
    this.renderCertificate(view.certificate)
    this.renderReport(view.last_report)
    if (this.opts.chartsEnabled !== false) this.renderCharts(view)
  }

  private renderSuggestion(view: SessionView): void {
    const body = this.el('#suggestion-body')
    const advance = this.el<HTMLButtonElement>('#advance-cycle')
    if (view.state === 'finished') {
      body.innerHTML =
        `<p>Campaign finished after ${view.k - 1} cycles.</p>` +
        `<p>Final reference (raw): ${vector('final_reference', view.reference_raw)}</p>`
      advance.disabled = true
      return
    }
    if (view.state === 'cycle_ready') {
      body.innerHTML = '<p>All measurements in; ready to advance.</p>'
      advance.disabled = false
      return
    }
    advance.disabled = true
    const sug = view.pending_suggestion
    if (!sug) {
      body.textContent = 'No pending suggestion.'
      return
    }
    body.innerHTML =
      `<p>purpose: <strong data-field="purpose" data-value="${sug.purpose}">${sug.purpose}</strong>` +
      ` (id <code>${sug.id}</code>)</p>` +
      `<p>apply u (raw units): ${vector('u_raw', sug.u_raw)}</p>` +
      `<p>scaled: ${vector('u_scaled', sug.u_scaled)}</p>`
  }

  private renderForm(view: SessionView): void {
    const gSpan = this.el('#g-inputs')
    const nG = view.config.noise.sigma_g.length
    const existing = gSpan.querySelectorAll('input').length
    if (existing !== nG) {
      gSpan.innerHTML = Array.from(
        { length: nG },
        (_, j) => `<label>g&#770;<sub>${j}</sub> <input class="g-input" data-index="${j}" autocomplete="off"></label>`,
      ).join(' ')
    }
    const enabled = view.state === 'awaiting_measurement'
    this.el<HTMLInputElement>('#phi-input').disabled = !enabled
    gSpan.querySelectorAll('input').forEach((inp) => ((inp as HTMLInputElement).disabled = !enabled))
    this.el<HTMLButtonElement>('#submit-measurement').disabled = !enabled
  }

  private renderCertificate(cert: CertificateView | null): void {
    const body = this.el('#certificate-body')
    if (!cert) {
      body.textContent = 'No completed cycle yet.'
      return
    }
    const rows = cert.per_constraint
      .map((entry, j) => {
        const cls = entry.margin >= 0 ? 'safe' : 'unsafe'
        return (
          `<tr class="constraint-row ${cls}">` +
          `<td>g<sub>${j}</sub></td>` +
          `<td>${valueSpan(`certificate.robust_value.${j}`, entry.robust_value)}</td>` +
          `<td>${valueSpan(`certificate.backoff.${j}`, entry.backoff)}</td>` +
          `<td>${valueSpan(`certificate.margin.${j}`, entry.margin)}</td></tr>`
        )
      })
      .join('')
    body.innerHTML =
      `<p>ball radius ${valueSpan('certificate.radius', cert.radius)}; ` +
      `verdict <strong data-field="certificate.safe" data-value="${cert.safe}" class="${cert.safe ? 'safe' : 'unsafe'}">` +
      `${cert.safe ? 'SAFE' : 'NOT SAFE'}</strong></p>` +
      `<table><thead><tr><th></th><th>robust value</th><th>back-off</th><th>margin</th></tr></thead>` +
      `<tbody>${rows}</tbody></table>`
  }

  private renderReport(report: CycleReportView | null): void {
    const body = this.el('#report-body')
    if (!report) {
      body.textContent = 'No completed cycle yet.'
      return
    }
    body.innerHTML =
      `<p>cycle ${valueSpan('report.k', report.k)}; reference ` +
      `<strong data-field="report.reference_changed" data-value="${report.reference_changed}">` +
      `${report.reference_changed ? 'moved' : 'unchanged'}</strong></p>` +
      `<p>new reference (scaled): ${vector('report.new_reference_scaled', report.new_reference_scaled)}</p>` +
      `<p>gradient of cost: ${vector('report.grad_phi', report.grad_phi)}</p>` +
      `<p>multipliers &lambda;: ${vector('report.lambda', report.lambda)}; ` +
      `stationarity ${valueSpan('report.stationarity_norm', report.stationarity_norm)}</p>` +
      `<p>nearly active constraints: <span data-field="report.active_set" data-value="${report.active_set.join(',')}">` +
      `${report.active_set.length ? report.active_set.join(', ') : 'none'}</span></p>`
  }

  private renderCharts(view: SessionView): void {
    drawDecisionScatter(
      this.el<HTMLCanvasElement>('#decision-chart'),
      view.history,
      view.reference_scaled,
    )
    drawCostHistory(this.el<HTMLCanvasElement>('#cost-chart'), view.history)
  }

  readForm(): { phi: number; g: number[] } | null {
    const error = this.el<HTMLDivElement>('#form-error')
    const rawPhi = this.el<HTMLInputElement>('#phi-input').value.trim()
    const rawG = Array.from(this.root.querySelectorAll<HTMLInputElement>('.g-input')).map((inp) =>
      inp.value.trim(),
    )
    const fields = [rawPhi, ...rawG]
    if (fields.some((f) => f === '' || !Number.isFinite(Number(f)))) {
      error.hidden = false
      error.textContent = 'All fields must be finite numbers.'
      return null
    }
    error.hidden = true
    error.textContent = ''
    return { phi: Number(rawPhi), g: rawG.map(Number) }
  }

  async submitMeasurement(): Promise<void> {
    if (this.busy) return
    const view = this.view
    const sug = view?.pending_suggestion
    if (!view || !sug) return
    const values = this.readForm()
    if (values === null) return // validation failed; nothing sent
    this.busy = true
    try {
      await this.api.postMeasurement(this.sessionId, {
        suggestion_id: sug.id,
        phi_hat: values.phi,
        g_hat: values.g,
      })
      this.el<HTMLInputElement>('#phi-input').value = ''
      this.root.querySelectorAll<HTMLInputElement>('.g-input').forEach((inp) => (inp.value = ''))
      this.showError(null)
    } catch (err) {
      // a 409 means our snapshot went stale; resync and let the operator retry
      if (!(err instanceof ApiError && err.status === 409)) this.showError(err)
    } finally {
      this.busy = false
    }
    await this.refresh()
  }

  async advanceCycle(): Promise<void> {
    if (this.busy) return
    this.busy = true
    try {
      await this.api.advance(this.sessionId)
      this.showError(null)
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 409)) this.showError(err)
    } finally {
      this.busy = false
    }
    await this.refresh()
  }
}
