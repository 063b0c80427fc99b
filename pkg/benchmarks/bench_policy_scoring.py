#!/usr/bin/env python3
"""Benchmark the policy-tree scorer: compiled extension vs numpy fallback.

The scorer is the hot kernel: every agent step evaluates |A|^T policies.
Three representative workloads: the noisy number-entry model (66 states,
31 actions), the dyad system model (243 states, 3 actions), and a generic
mid-sized model. Reports per-call time and the cross-backend agreement.
"""
import time

import numpy as np

from aifloop import _kernels
from aifloop.envs.dyad import DyadConfig, build_system_model
from aifloop.envs.number_entry import NumberEntryConfig, build_model
from aifloop.genmodel import GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from aifloop.inference import Belief
from aifloop.planning import score_all_policies
from aifloop.probmath import Dist, make_rng


def generic_model(num_states=40, num_actions=8, num_obs=10):
    rng = make_rng(0)
    a = rng.random((num_obs, num_states)) + 0.05
    a /= a.sum(axis=0)
    b = rng.random((num_actions, num_states, num_states)) + 0.05
    b /= b.sum(axis=1, keepdims=True)
    c = rng.dirichlet(np.ones(num_states))
    d = rng.dirichlet(np.ones(num_states))
    return GenerativeModel(
        num_states, num_actions, num_obs,
        ObservationModel(a), TransitionModel(b),
        PreferenceSchedule("states", (Dist(c),)), Dist(d),
    )


def bench(name, model, horizon, mode, repeats=20):
    q = Belief(model.D, 0)
    rows = {}
    for backend in sorted(_kernels.BACKENDS):
        score_all_policies(q, model, horizon, 0, mode, backend=backend)  # warm up
        t0 = time.perf_counter()
        for _ in range(repeats):
            efes = score_all_policies(q, model, horizon, 0, mode, backend=backend)
        rows[backend] = ((time.perf_counter() - t0) / repeats, efes)
    line = f"{name:<38}"
    for backend, (dt, _) in rows.items():
        line += f"  {backend}: {dt * 1e3:8.2f} ms"
    if len(rows) == 2:
        a, b = (rows[k][1] for k in sorted(rows))
        line += f"  |Δ|max {np.max(np.abs(a - b)):.2e}"
        line += f"  speedup x{rows['numpy'][0] / rows['compiled'][0]:.1f}"
    print(line)


def main():
    print(f"active backend: {_kernels.ACTIVE_BACKEND}; built: {sorted(_kernels.BACKENDS)}\n")
    entry = build_model(NumberEntryConfig(N=16, epsilon_true=0.2, epsilon_grid=(0.0, 0.1, 0.2, 0.3)))
    bench("number entry S=66 A=31 T=2 (961 pol.)", entry, 2, "state_info")
    dyad = build_system_model(DyadConfig(M=9, goal=4))
    bench("dyad system  S=243 A=3 T=2 (9 pol.)", dyad, 2, "state")
    bench("dyad system  S=243 A=3 T=4 (81 pol.)", dyad, 4, "state")
    bench("generic      S=40 A=8 T=3 (512 pol.)", generic_model(), 3, "state_info")


if __name__ == "__main__":
    main()
