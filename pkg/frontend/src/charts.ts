// Canvas drawing for the two campaign charts. Purely cosmetic: disabling
// everything here changes no session state.

import type { HistoryRow } from './types.js'

function context(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext('2d')
  } catch {
    return null
  }
}

export function drawDecisionScatter(
  canvas: HTMLCanvasElement,
  history: HistoryRow[],
  referenceScaled: number[],
): void {
  const ctx = context(canvas)
  if (!ctx || referenceScaled.length < 2) return
  const w = canvas.width
  const h = canvas.height
  const px = (x: number) => 8 + x * (w - 16)
  const py = (y: number) => h - 8 - y * (h - 16)

  ctx.clearRect(0, 0, w, h)
  ctx.strokeStyle = '#888'
  ctx.strokeRect(8, 8, w - 16, h - 16)

  ctx.fillStyle = '#c0392b'
  for (const row of history) {
    const u = row.suggestion.u_scaled
    ctx.beginPath()
    ctx.arc(px(u[0]), py(u[1]), 2.5, 0, 2 * Math.PI)
    ctx.fill()
  }
  ctx.fillStyle = '#2980b9'
  ctx.beginPath()
  ctx.arc(px(referenceScaled[0]), py(referenceScaled[1]), 5, 0, 2 * Math.PI)
  ctx.fill()
}

export function drawCostHistory(canvas: HTMLCanvasElement, history: HistoryRow[]): void {
  const ctx = context(canvas)
  if (!ctx || history.length === 0) return
  const w = canvas.width
  const h = canvas.height
  const values = history.map((r) => r.phi_hat)
  const lo = Math.min(...values)
  const hi = Math.max(...values)
  const span = hi - lo || 1
  const px = (i: number) => 8 + (i / Math.max(values.length - 1, 1)) * (w - 16)
  const py = (v: number) => h - 8 - ((v - lo) / span) * (h - 16)

  ctx.clearRect(0, 0, w, h)
  ctx.strokeStyle = '#888'
  ctx.strokeRect(8, 8, w - 16, h - 16)

  ctx.strokeStyle = '#c0392b'
  ctx.beginPath()
  values.forEach((v, i) => (i === 0 ? ctx.moveTo(px(i), py(v)) : ctx.lineTo(px(i), py(v))))
  ctx.stroke()

  // running best measured cost
  ctx.strokeStyle = '#2980b9'
  ctx.beginPath()
  let best = Infinity
  values.forEach((v, i) => {
    best = Math.min(best, v)
    if (i === 0) ctx.moveTo(px(i), py(best))
    else ctx.lineTo(px(i), py(best))
  })
  ctx.stroke()
}
