// Typed REST client for the session service.

import type { CycleReportView, MeasurementBody, SessionConfig, SessionView } from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

async function readDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown }
    return typeof body.detail === 'string' ? body.detail : JSON.stringify(body)
  } catch {
    return res.statusText
  }
}

export class SessionApi {
  private readonly fetchImpl: FetchLike

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init))
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init)
    if (!res.ok) throw new ApiError(res.status, await readDetail(res))
    return (await res.json()) as T
  }

  createSession(config: SessionConfig): Promise<{ session_id: string }> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(config),
    })
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request(`/sessions/${sessionId}`)
  }

  getSuggestion(
    sessionId: string,
  ): Promise<{ status: string; suggestion?: SessionView['pending_suggestion'] }> {
    return this.request(`/sessions/${sessionId}/suggestion`)
  }

  postMeasurement(sessionId: string, body: MeasurementBody): Promise<{ status: string }> {
    return this.request(`/sessions/${sessionId}/measurements`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })
  }

  advance(sessionId: string): Promise<CycleReportView> {
    return this.request(`/sessions/${sessionId}/advance`, { method: 'POST' })
  }
}
