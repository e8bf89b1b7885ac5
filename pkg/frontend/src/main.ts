// Browser bootstrap: attach the console to a session and poll it.

import { SessionApi } from './api.js'
import { ConsoleApp } from './app.js'

const POLL_MS = 1500

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback
}

function start(): void {
  const baseInput = document.querySelector<HTMLInputElement>('#base-url')!
  const sessionInput = document.querySelector<HTMLInputElement>('#session-id')!
  const attach = document.querySelector<HTMLButtonElement>('#attach')!
  const mount = document.querySelector<HTMLDivElement>('#console')!

  baseInput.value = param('base', 'http://127.0.0.1:8731')
  sessionInput.value = param('session', '')

  let timer: ReturnType<typeof setInterval> | null = null
  attach.addEventListener('click', () => {
    if (timer !== null) clearInterval(timer)
    const app = new ConsoleApp(mount, new SessionApi(baseInput.value), sessionInput.value.trim())
    void app.refresh()
    timer = setInterval(() => void app.refresh(), POLL_MS)
  })
}

start()
