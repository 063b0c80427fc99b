"""Vectorized policy-tree scorer (pure numpy fallback).

Scores every length-T action sequence in lexicographic order by sharing the
prediction tree across policies: a prefix's hypothetical belief and step
term are computed once and reused by all policies extending it.

Modes: 0 = information gain + pragmatic value over observation preferences,
1 = risk + ambiguity over state preferences, 2 = mode 1 minus information
gain. All step terms are averaged over the horizon.
"""
from __future__ import annotations

import numpy as np

MODE_OBS = 0
MODE_STATE = 1
MODE_STATE_INFO = 2


def _floored_rows(q: np.ndarray, floor: float) -> np.ndarray:
    qf = np.maximum(q, floor)
    return qf / qf.sum(axis=1, keepdims=True)


def _info_gain_rows(q: np.ndarray, table: np.ndarray, floor: float) -> np.ndarray:
    """Expected KL(posterior ‖ prior) per belief row; zero-probability branches drop out."""
    p_obs = q @ table.T
    joint = q[:, None, :] * table[None, :, :]
    log_qf = np.log(_floored_rows(q, floor))
    out = np.zeros(q.shape[0])
    nz = joint > 0
    log_joint = np.zeros_like(joint)
    log_joint[nz] = np.log(joint[nz])
    log_p = np.zeros_like(p_obs)
    pnz = p_obs > 0
    log_p[pnz] = np.log(p_obs[pnz])
    contrib = np.where(nz, joint * (log_joint - log_p[:, :, None] - log_qf[:, None, :]), 0.0)
    out = contrib.sum(axis=(1, 2))
    return out


def _risk_rows(q: np.ndarray, log_pref: np.ndarray) -> np.ndarray:
    nz = q > 0
    log_q = np.zeros_like(q)
    log_q[nz] = np.log(q[nz])
    return np.where(nz, q * (log_q - log_pref[None, :]), 0.0).sum(axis=1)


def score_policy_tree(a_tables, per_action, b_stack, q0, horizon, mode, prefs_log, col_ent, floor):
    """EFE for all num_actions**horizon policies, lexicographic order.

    a_tables: (nA or 1, O, S); b_stack: (nA, S, S); q0: (S,);
    prefs_log: (T, dim) log of floored preferences per plan step;
    col_ent: (nA or 1, S) per-state observation entropy (modes 1 and 2).
    """
    num_actions = b_stack.shape[0]
    q = np.asarray(q0, dtype=np.float64)[None, :]
    totals = np.zeros(1)
    for k in range(horizon):
        n = q.shape[0]
        s_dim = q.shape[1]
        q_next = np.empty((n * num_actions, s_dim))
        terms = np.empty((n, num_actions))
        for a in range(num_actions):
            qa = q @ b_stack[a].T
            qa /= qa.sum(axis=1, keepdims=True)
            t_idx = a if a_tables.shape[0] > 1 else 0
            table = a_tables[t_idx]
            if mode == MODE_OBS:
                ig = _info_gain_rows(qa, table, floor)
                pv = (qa @ table.T) @ prefs_log[k]
                term = -ig - pv
            else:
                risk = _risk_rows(qa, prefs_log[k])
                amb = qa @ col_ent[t_idx]
                term = risk + amb
                if mode == MODE_STATE_INFO:
                    term = term - _info_gain_rows(qa, table, floor)
            q_next[a::num_actions] = qa
            terms[:, a] = term
        totals = (totals[:, None] + terms).reshape(-1)
        q = q_next
    return totals / horizon
