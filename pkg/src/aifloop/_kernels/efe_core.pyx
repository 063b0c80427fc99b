# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled policy-tree scorer: same contract as efe_numpy.score_policy_tree.

Depth-first traversal of the action tree with explicit C loops; prefix
beliefs and step terms are shared across all policies extending a prefix.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

DEF MODE_OBS = 0
DEF MODE_STATE = 1
DEF MODE_STATE_INFO = 2


cdef double _step_term(const double[:, :, ::1] a_tables, int t_idx,
                       const double[::1] q, const double[:, ::1] prefs_log, int k,
                       const double[:, ::1] col_ent, int mode, double floor,
                       double[::1] lnqf) nogil:
    cdef int O = a_tables.shape[1]
    cdef int S = a_tables.shape[2]
    cdef int o, s
    cdef double qfsum = 0.0, p_o, lnp, j, ig = 0.0, pv = 0.0, risk = 0.0, amb = 0.0

    if mode == MODE_OBS or mode == MODE_STATE_INFO:
        for s in range(S):
            lnqf[s] = q[s] if q[s] > floor else floor
            qfsum += lnqf[s]
        for s in range(S):
            lnqf[s] = log(lnqf[s] / qfsum)
        for o in range(O):
            p_o = 0.0
            for s in range(S):
                p_o += a_tables[t_idx, o, s] * q[s]
            if mode == MODE_OBS:
                pv += p_o * prefs_log[k, o]
            if p_o > 0.0:
                lnp = log(p_o)
                for s in range(S):
                    j = a_tables[t_idx, o, s] * q[s]
                    if j > 0.0:
                        ig += j * (log(j) - lnp - lnqf[s])
    if mode == MODE_OBS:
        return -ig - pv
    for s in range(S):
        if q[s] > 0.0:
            risk += q[s] * (log(q[s]) - prefs_log[k, s])
        amb += q[s] * col_ent[t_idx, s]
    if mode == MODE_STATE_INFO:
        return risk + amb - ig
    return risk + amb


cdef void _descend(const double[:, :, ::1] a_tables, bint per_action,
                   const double[:, :, ::1] b_stack, double[:, ::1] q_levels,
                   int depth, int horizon, int mode,
                   const double[:, ::1] prefs_log, const double[:, ::1] col_ent,
                   double floor, double partial, double[::1] out, Py_ssize_t* cursor,
                   double[::1] lnqf) nogil:
    cdef int num_actions = b_stack.shape[0]
    cdef int S = b_stack.shape[1]
    cdef int a, s1, s2, t_idx
    cdef double acc, total
    for a in range(num_actions):
        total = 0.0
        for s2 in range(S):
            acc = 0.0
            for s1 in range(S):
                acc += b_stack[a, s2, s1] * q_levels[depth, s1]
            q_levels[depth + 1, s2] = acc
            total += acc
        for s2 in range(S):
            q_levels[depth + 1, s2] /= total
        t_idx = a if per_action else 0
        acc = partial + _step_term(a_tables, t_idx, q_levels[depth + 1], prefs_log,
                                   depth, col_ent, mode, floor, lnqf)
        if depth + 1 == horizon:
            out[cursor[0]] = acc / horizon
            cursor[0] += 1
        else:
            _descend(a_tables, per_action, b_stack, q_levels, depth + 1, horizon,
                     mode, prefs_log, col_ent, floor, acc, out, cursor, lnqf)


def score_policy_tree(a_tables, per_action, b_stack, q0, horizon, mode, prefs_log, col_ent, floor):
    a_tables = np.ascontiguousarray(a_tables, dtype=np.float64)
    b_stack = np.ascontiguousarray(b_stack, dtype=np.float64)
    prefs_log = np.ascontiguousarray(prefs_log, dtype=np.float64)
    col_ent = np.ascontiguousarray(col_ent, dtype=np.float64)
    q0 = np.ascontiguousarray(q0, dtype=np.float64)

    cdef int num_actions = b_stack.shape[0]
    cdef int S = b_stack.shape[1]
    cdef int T = horizon
    cdef int mode_c = mode
    cdef bint pa = per_action
    cdef double floor_c = floor

    q_levels_arr = np.empty((T + 1, S), dtype=np.float64)
    q_levels_arr[0] = q0
    out_arr = np.empty(int(num_actions) ** int(T), dtype=np.float64)
    lnqf_arr = np.empty(S, dtype=np.float64)

    cdef double[:, ::1] q_levels = q_levels_arr
    cdef double[::1] out = out_arr
    cdef double[::1] lnqf = lnqf_arr
    cdef const double[:, :, ::1] at = a_tables
    cdef const double[:, :, ::1] bs = b_stack
    cdef const double[:, ::1] pl = prefs_log
    cdef const double[:, ::1] ce = col_ent
    cdef Py_ssize_t cursor = 0

    with nogil:
        _descend(at, pa, bs, q_levels, 0, T, mode_c, pl, ce, floor_c, 0.0, out, &cursor, lnqf)
    return out_arr
