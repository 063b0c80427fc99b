// DOM rendering: the whole view is rebuilt from the state mirror on every
// event. No inference happens here; the browser just draws server numbers.

import { answeredCount, canAnswer, flipsVisible, UiSessionState } from './state'

function el(tag: string, cls: string, text?: string): HTMLElement {
    const node = document.createElement(tag)
    node.className = cls
    if (text !== undefined) node.textContent = text
    return node
}

function renderBelief(state: UiSessionState): HTMLElement {
    const panel = el('div', 'panel belief')
    panel.appendChild(el('h2', '', 'belief over numbers'))
    const bars = el('div', 'bars')
    const peak = Math.max(1e-9, ...state.belief)
    state.belief.forEach((p, i) => {
        const slot = el('div', 'slot')
        const bar = el('div', 'bar')
        bar.style.height = `${Math.round((p / peak) * 100)}%`
        bar.title = `P(${i}) = ${p.toFixed(4)}`
        slot.appendChild(bar)
        slot.appendChild(el('div', 'tick', String(i)))
        bars.appendChild(slot)
    })
    panel.appendChild(bars)
    panel.appendChild(el('div', 'meta', `entropy ${state.beliefEntropy.toFixed(3)} nats`))
    return panel
}

function renderEfe(state: UiSessionState): HTMLElement {
    const panel = el('div', 'panel efe')
    panel.appendChild(el('h2', '', 'candidate actions (lower score is better)'))
    const rows = el('div', 'efe-rows')
    const sorted = [...state.efeRows].sort((a, b) => a.value - b.value).slice(0, 12)
    const spread = Math.max(1e-9, ...sorted.map((r) => Math.abs(r.info_gain) + Math.abs(r.pragmatic)))
    for (const row of sorted) {
        const line = el('div', 'efe-row')
        line.appendChild(el('span', 'label', row.label))
        const split = el('div', 'split')
        const ig = el('div', 'ig')
        ig.style.width = `${(Math.abs(row.info_gain) / spread) * 100}%`
        ig.title = `info gain ${row.info_gain.toFixed(3)}`
        const pv = el('div', 'pv')
        pv.style.width = `${(Math.abs(row.pragmatic) / spread) * 100}%`
        pv.title = `pragmatic ${row.pragmatic.toFixed(3)}`
        split.appendChild(ig)
        split.appendChild(pv)
        line.appendChild(split)
        line.appendChild(el('span', 'value', row.value.toFixed(3)))
        rows.appendChild(line)
    }
    panel.appendChild(rows)
    return panel
}

function renderHistory(state: UiSessionState): HTMLElement {
    const panel = el('div', 'panel history')
    panel.appendChild(el('h2', '', 'questions and answers'))
    const list = el('ol', 'qa')
    const reveal = flipsVisible(state)
    for (const item of state.history) {
        const answer = item.bit === null ? '…' : item.bit === 1 ? 'above' : 'below'
        const li = el('li', '', `above or below ${item.cutpoint}? ${answer}`)
        if (reveal && item.flipped) {
            li.appendChild(el('span', 'flip', ' (corrupted in transit)'))
        }
        list.appendChild(li)
    }
    panel.appendChild(list)
    return panel
}

function renderPrompt(state: UiSessionState, answer: (bit: 0 | 1) => void): HTMLElement {
    const panel = el('div', 'panel prompt')
    if (state.phase === 'committed') {
        panel.appendChild(el('h2', 'commit', `the number is ${state.commit}`))
        panel.appendChild(el('div', 'meta', `${answeredCount(state)} answers used`))
        return panel
    }
    if (state.phase === 'aborted') {
        panel.appendChild(el('h2', '', `session ended: ${state.abortedReason}`))
        return panel
    }
    if (state.currentQuery !== null) {
        panel.appendChild(el('h2', '', `is your number above or below ${state.currentQuery}?`))
    } else {
        panel.appendChild(el('h2', '', 'thinking…'))
    }
    const controls = el('div', 'controls')
    const below = el('button', 'answer', 'below (b)') as HTMLButtonElement
    const above = el('button', 'answer', 'above (a)') as HTMLButtonElement
    below.disabled = above.disabled = !canAnswer(state)
    below.onclick = () => answer(0)
    above.onclick = () => answer(1)
    controls.appendChild(below)
    controls.appendChild(above)
    panel.appendChild(controls)
    return panel
}

export function render(root: HTMLElement, state: UiSessionState, answer: (bit: 0 | 1) => void): void {
    root.replaceChildren()
    const header = el('div', 'header', `number entry, N=${state.n}`)
    if (state.epsilon > 0) header.textContent += ` (channel noise ${state.epsilon})`
    root.appendChild(header)
    if (state.lastError) root.appendChild(el('div', 'error', state.lastError))
    root.appendChild(renderPrompt(state, answer))
    root.appendChild(renderBelief(state))
    root.appendChild(renderEfe(state))
    root.appendChild(renderHistory(state))
}
