// Payload shapes of the session service API. The console renders these
// verbatim; it computes no algorithmic quantities of its own.

export type SessionState = 'awaiting_measurement' | 'cycle_ready' | 'finished'

export interface SuggestionView {
  id: string
  u_raw: number[]
  u_scaled: number[]
  purpose: string
}

export interface CertificateEntry {
  kappa: number[]
  backoff: number
  robust_value: number
  margin: number
}

export interface CertificateView {
  center_scaled: number[]
  radius: number
  safe: boolean
  per_constraint: CertificateEntry[]
}

export interface CycleReportView {
  k: number
  grad_phi: number[]
  grad_g: number[][]
  kappa: number[][]
  active_set: number[]
  lambda: number[]
  stationarity_norm: number
  new_reference_scaled: number[]
  reference_changed: boolean
  certificate: CertificateView
  new_reference_raw?: number[]
  session_state?: SessionState
}

export interface HistoryRow {
  k: number
  suggestion: SuggestionView
  phi_hat: number
  g_hat: number[]
}

export interface NoiseConfig {
  sigma_phi: number
  sigma_g: number[]
  policy?: { kind: string; confidence?: number | null }
}

export interface SessionConfig {
  space: { lower: number[]; upper: number[] }
  initial_reference: number[]
  noise: NoiseConfig
  delta_e: number
  anneal?: boolean
  backoff_enabled?: boolean
  auto_shrink?: boolean
  max_cycles?: number
}

export interface SessionView {
  session_id: string
  state: SessionState
  k: number
  delta_e: number
  noise_scale: number
  config: SessionConfig
  reference_raw: number[]
  reference_scaled: number[]
  pending_suggestion: SuggestionView | null
  certificate: CertificateView | null
  last_report: CycleReportView | null
  history: HistoryRow[]
}

export interface MeasurementBody {
  suggestion_id: string
  phi_hat: number
  g_hat: number[]
}
