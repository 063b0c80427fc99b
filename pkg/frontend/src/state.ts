// The session mirror: a pure fold over the event stream. Replaying a
// recorded log always reproduces the same state, which is what makes the
// rendered view trustworthy after reconnects.

import type { EfeAction, UiEvent } from './events'

export type Phase = 'connecting' | 'querying' | 'waiting' | 'committed' | 'aborted'

export type QaItem = {
    cutpoint: number
    bit: 0 | 1 | null
    // disclosed per event by the service, but only rendered after commit
    flipped: boolean | null
}

export type UiSessionState = {
    n: number
    epsilon: number
    phase: Phase
    currentQuery: number | null
    belief: number[]
    beliefEntropy: number
    efeRows: EfeAction[]
    history: QaItem[]
    commit: number | null
    abortedReason: string | null
    lastError: string | null
    inFlight: boolean
}

export function initialState(): UiSessionState {
    return {
        n: 0,
        epsilon: 0,
        phase: 'connecting',
        currentQuery: null,
        belief: [],
        beliefEntropy: 0,
        efeRows: [],
        history: [],
        commit: null,
        abortedReason: null,
        lastError: null,
        inFlight: false,
    }
}

export function reduce(state: UiSessionState, event: UiEvent): UiSessionState {
    switch (event.type) {
        case 'reset':
            return initialState()
        case 'created':
            return { ...initialState(), n: event.N, epsilon: event.epsilon, phase: 'waiting' }
        case 'query':
            return {
                ...state,
                phase: 'querying',
                inFlight: false,
                currentQuery: event.cutpoint,
                history: [...state.history, { cutpoint: event.cutpoint, bit: null, flipped: null }],
            }
        case 'belief':
            return { ...state, belief: event.dist, beliefEntropy: event.entropy }
        case 'efe':
            return { ...state, efeRows: event.actions }
        case 'sent':
            // one answer in flight: controls stay closed until the echo
            return state.phase === 'querying' ? { ...state, inFlight: true } : state
        case 'response': {
            const history = state.history.slice()
            const last = history[history.length - 1]
            if (last && last.bit === null) {
                history[history.length - 1] = { ...last, bit: event.bit }
            }
            return { ...state, phase: 'waiting', inFlight: false, currentQuery: null, history }
        }
        case 'flipped': {
            const history = state.history.slice()
            const last = history[history.length - 1]
            if (last) {
                history[history.length - 1] = { ...last, flipped: event.flipped }
            }
            return { ...state, history }
        }
        case 'commit':
            return { ...state, phase: 'committed', inFlight: false, currentQuery: null, commit: event.n }
        case 'aborted':
            return { ...state, phase: 'aborted', inFlight: false, abortedReason: event.reason }
        case 'error':
            return { ...state, lastError: `${event.code}: ${event.msg}` }
        default:
            return state
    }
}

export function replay(events: UiEvent[], from?: UiSessionState): UiSessionState {
    let state = from ?? initialState()
    for (const event of events) {
        state = reduce(state, event)
    }
    return state
}

export const canAnswer = (s: UiSessionState): boolean => s.phase === 'querying' && !s.inFlight

export const answeredCount = (s: UiSessionState): number =>
    s.history.filter((h) => h.bit !== null).length

// flip markers stay hidden until the episode is over
export const flipsVisible = (s: UiSessionState): boolean => s.phase === 'committed' || s.phase === 'aborted'

export const beliefSum = (s: UiSessionState): number => s.belief.reduce((a, b) => a + b, 0)
