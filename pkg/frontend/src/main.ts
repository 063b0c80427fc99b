// Bootstrap: a small config form, then the live session view.

import { connectSocket, Connection, createSession, SessionOverrides } from './net'
import { render } from './render'

const app = document.getElementById('app')
if (!app) throw new Error('missing #app mount point')
const root = app as HTMLElement

function banner(text: string, retry: () => void): void {
    root.replaceChildren()
    const box = document.createElement('div')
    box.className = 'error'
    box.textContent = text
    const button = document.createElement('button')
    button.textContent = 'retry'
    button.onclick = retry
    box.appendChild(button)
    root.appendChild(box)
}

function form(): void {
    root.replaceChildren()
    const panel = document.createElement('div')
    panel.className = 'panel form'
    panel.innerHTML = `
      <h2>think of a number…</h2>
      <label>N <input id="cfg-n" type="number" value="16" min="2"></label>
      <label>simulated channel noise <input id="cfg-eps" type="number" value="0" min="0" max="0.49" step="0.05"></label>
      <label>seed <input id="cfg-seed" type="number" value="0"></label>
      <button id="cfg-go">start</button>
    `
    root.appendChild(panel)
    const go = panel.querySelector('#cfg-go') as HTMLButtonElement
    go.onclick = () => {
        const n = Number((panel.querySelector('#cfg-n') as HTMLInputElement).value)
        const eps = Number((panel.querySelector('#cfg-eps') as HTMLInputElement).value)
        const seed = Number((panel.querySelector('#cfg-seed') as HTMLInputElement).value)
        const overrides: SessionOverrides = { N: n, seed }
        if (eps > 0) {
            overrides.epsilon_true = eps
            overrides.epsilon_grid = [0, eps / 2, eps, Math.min(0.45, eps * 1.5)]
        }
        void start(overrides)
    }
}

async function start(overrides: SessionOverrides): Promise<void> {
    const base = window.location.origin
    let sessionId: string
    try {
        sessionId = await createSession(base, overrides)
    } catch (err) {
        banner(`cannot reach the session service: ${(err as Error).message}`, form)
        return
    }
    let conn: Connection
    const attach = () => {
        conn = connectSocket(
            base,
            sessionId,
            (state) => render(root, state, (bit) => conn.answer(bit)),
            () => banner('connection dropped', attach), // replay restores the view
        )
    }
    attach()
    document.onkeydown = (ev) => {
        if (ev.key === 'a') conn.answer(1)
        if (ev.key === 'b') conn.answer(0)
    }
}

form()
