// Wire-level events from the session service, one JSON object per message.
// The WebSocket replays the full ordered log on every (re)connection.

export type EfeAction = {
    action: number
    value: number
    info_gain: number
    pragmatic: number
    label: string
}

export type ServerEvent =
    | { type: 'created'; N: number; epsilon: number; horizon: number }
    | { type: 'query'; cutpoint: number }
    | { type: 'belief'; dist: number[]; entropy: number }
    | { type: 'efe'; actions: EfeAction[] }
    | { type: 'response'; bit: 0 | 1 }
    | { type: 'flipped'; flipped: boolean }
    | { type: 'commit'; n: number }
    | { type: 'aborted'; reason: string }
    | { type: 'error'; code: string; msg: string }

// Local-only events: a fresh connection resets the mirror before the replay
// arrives; 'sent' closes the answer controls until the server echoes back.
export type LocalEvent = { type: 'reset' } | { type: 'sent'; bit: 0 | 1 }

export type UiEvent = ServerEvent | LocalEvent
