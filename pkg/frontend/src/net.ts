// Session plumbing: create over HTTP, then mirror the WebSocket stream.
// Every (re)connection starts with a reset followed by the server's replay
// of the full event log, so dropped sockets resume cleanly.

import type { ServerEvent } from './events'
import type { UiSessionState } from './state'
import { initialState, reduce } from './state'

export type SessionOverrides = {
    N?: number
    epsilon_true?: number
    epsilon_grid?: number[]
    horizon?: number
    seed?: number
}

export type Connection = {
    answer: (bit: 0 | 1) => void
    abort: () => void
}

export async function createSession(base: string, overrides: SessionOverrides): Promise<string> {
    const res = await fetch(`${base}/session`, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(overrides),
    })
    if (!res.ok) {
        const doc = await res.json().catch(() => ({ msg: res.statusText }))
        throw new Error(doc.msg ?? `create failed: ${res.status}`)
    }
    const doc = await res.json()
    return doc.id as string
}

export function connectSocket(
    base: string,
    sessionId: string,
    onState: (s: UiSessionState) => void,
    onDrop: () => void,
): Connection {
    let state = initialState()
    const wsBase = base.replace(/^http/, 'ws')
    const socket = new WebSocket(`${wsBase}/session/${sessionId}/ws`)

    const dispatch = (event: Parameters<typeof reduce>[1]) => {
        state = reduce(state, event)
        onState(state)
    }

    socket.onopen = () => dispatch({ type: 'reset' })
    socket.onmessage = (msg) => dispatch(JSON.parse(msg.data) as ServerEvent)
    socket.onclose = () => onDrop()

    return {
        answer(bit: 0 | 1) {
            if (state.phase !== 'querying' || state.inFlight) return // one in flight
            socket.send(JSON.stringify({ type: 'response', bit }))
            dispatch({ type: 'sent', bit })
        },
        abort() {
            socket.close()
            void fetch(`${base}/session/${sessionId}`, { method: 'DELETE' })
        },
    }
}
