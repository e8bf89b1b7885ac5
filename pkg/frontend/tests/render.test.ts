// Rendering behavior against canned session snapshots (no server).

import { beforeEach, describe, expect, it } from 'vitest'

import { SessionApi } from '../src/api.js'
import { ConsoleApp } from '../src/app.js'
import type { SessionView } from '../src/types.js'

function view(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: 'abc123',
    state: 'awaiting_measurement',
    k: 1,
    delta_e: 0.05,
    noise_scale: 1.0,
    config: {
      space: { lower: [0, 0], upper: [1, 1] },
      initial_reference: [0.5, 0.5],
      noise: { sigma_phi: 0.01, sigma_g: [0.005] },
      delta_e: 0.05,
      max_cycles: 3,
    },
    reference_raw: [0.5, 0.5],
    reference_scaled: [0.5, 0.5],
    pending_suggestion: {
      id: 'exp-00001',
      u_raw: [0.5, 0.5],
      u_scaled: [0.5, 0.5],
      purpose: 'reference',
    },
    certificate: null,
    last_report: null,
    history: [],
    ...overrides,
  }
}

function appWith(snapshot: SessionView): ConsoleApp {
  const root = document.createElement('div')
  document.body.appendChild(root)
  const api = {
    getSession: async () => snapshot,
  } as unknown as SessionApi
  return new ConsoleApp(root, api, snapshot.session_id)
}

describe('render_session', () => {
  beforeEach(() => {
    document.body.innerHTML = ''
  })

  it('enables the measurement form while awaiting a measurement', async () => {
    const app = appWith(view())
    await app.refresh()
    expect(app.el<HTMLInputElement>('#phi-input').disabled).toBe(false)
    expect(app.el<HTMLButtonElement>('#submit-measurement').disabled).toBe(false)
    expect(app.el<HTMLButtonElement>('#advance-cycle').disabled).toBe(true)
    expect(app.el('#suggestion-body').textContent).toContain('reference')
  })

  it('enables advance and disables the form when the cycle is ready', async () => {
    const app = appWith(view({ state: 'cycle_ready', pending_suggestion: null }))
    await app.refresh()
    expect(app.el<HTMLButtonElement>('#advance-cycle').disabled).toBe(false)
    expect(app.el<HTMLInputElement>('#phi-input').disabled).toBe(true)
    expect(app.el<HTMLButtonElement>('#submit-measurement').disabled).toBe(true)
  })

  it('shows a summary when finished', async () => {
    const app = appWith(
      view({ state: 'finished', pending_suggestion: null, k: 4, reference_raw: [0.25, 0.75] }),
    )
    await app.refresh()
    expect(app.el('#suggestion-body').textContent).toContain('finished after 3 cycles')
    expect(app.el<HTMLButtonElement>('#advance-cycle').disabled).toBe(true)
  })

  it('highlights unsafe margins in the certificate table', async () => {
    const app = appWith(
      view({
        certificate: {
          center_scaled: [0.5, 0.5],
          radius: 0.05,
          safe: false,
          per_constraint: [
            { kappa: [1, 1], backoff: 0.070710678, robust_value: -0.2, margin: 0.129289 },
            { kappa: [2, 0], backoff: 0.1, robust_value: -0.05, margin: -0.05 },
          ],
        },
      }),
    )
    await app.refresh()
    const rows = Array.from(document.querySelectorAll('.constraint-row'))
    expect(rows).toHaveLength(2)
    expect(rows[0].className).toContain('safe')
    expect(rows[1].className).toContain('unsafe')
    const verdict = document.querySelector('[data-field="certificate.safe"]')!
    expect(verdict.getAttribute('data-value')).toBe('false')
  })

  it('rejects non-numeric form input without sending a request', async () => {
    let posted = 0
    const snapshot = view()
    const root = document.createElement('div')
    document.body.appendChild(root)
    const api = {
      getSession: async () => snapshot,
      postMeasurement: async () => {
        posted += 1
        return { status: 'ok' }
      },
    } as unknown as SessionApi
    const app = new ConsoleApp(root, api, snapshot.session_id)
    await app.refresh()
    app.el<HTMLInputElement>('#phi-input').value = 'not-a-number'
    root.querySelectorAll<HTMLInputElement>('.g-input').forEach((inp) => (inp.value = '-0.5'))
    await app.submitMeasurement()
    expect(posted).toBe(0)
    const error = app.el<HTMLDivElement>('#form-error')
    expect(error.hidden).toBe(false)
    expect(error.textContent).toContain('finite')
  })

  it('rejects blank fields', async () => {
    let posted = 0
    const snapshot = view()
    const root = document.createElement('div')
    document.body.appendChild(root)
    const api = {
      getSession: async () => snapshot,
      postMeasurement: async () => {
        posted += 1
        return { status: 'ok' }
      },
    } as unknown as SessionApi
    const app = new ConsoleApp(root, api, snapshot.session_id)
    await app.refresh()
    app.el<HTMLInputElement>('#phi-input').value = '1.5'
    await app.submitMeasurement() // g input left blank
    expect(posted).toBe(0)
  })
})
