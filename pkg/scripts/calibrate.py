#!/usr/bin/env python3
"""Calibration runs behind the frozen test thresholds.

`number-entry` reports the distribution of the top-target posterior at the
moment of commit under the default noisy configuration; the minimum backs
the 0.55 floor asserted in tests/test_number_entry.py.

`dyad` reports how often the user's last-quarter mean surprise is at or
below its first-quarter mean in aligned runs; the rate backs the 0.9 floor
asserted in tests/test_dyad.py.
"""
import argparse

import numpy as np

from aifloop.envs.dyad import DyadConfig, run_dyad
from aifloop.envs.number_entry import NumberEntryConfig, build_model, run_entry_episode, target_marginal


def calibrate_number_entry(seeds: int) -> None:
    cfg = NumberEntryConfig(N=16, epsilon_true=0.2, epsilon_grid=(0.0, 0.1, 0.2, 0.3))
    model = build_model(cfg)
    tops, correct, queries = [], [], []
    for seed in range(seeds):
        trace, outcome = run_entry_episode(cfg, target="random", seed=seed, model=model)
        correct.append(outcome.correct)
        queries.append(outcome.queries)
        if outcome.committed is not None:
            marginal = target_marginal(np.array(trace.steps[-1].posterior), cfg)
            tops.append(marginal.max() / marginal.sum())
    qs = np.quantile(tops, [0.0, 0.01, 0.05, 0.5, 1.0])
    print(f"number-entry over {seeds} seeds (N=16, eps=0.2, grid 0/0.1/0.2/0.3):")
    print(f"  accuracy {np.mean(correct):.4f}, mean queries {np.mean(queries):.3f}")
    print(f"  commit-time top-target posterior: min {qs[0]:.4f}  q01 {qs[1]:.4f}  "
          f"q05 {qs[2]:.4f}  median {qs[3]:.4f}  max {qs[4]:.4f}")
    print(f"  documented commit threshold (floor asserted in tests): 0.55")


def calibrate_dyad(seeds: int) -> None:
    wins = 0
    for seed in range(seeds):
        trace, _ = run_dyad(DyadConfig(M=9, goal=4, z0=0, seed=seed))
        surprise = [t.surprise for t in trace.turns if t.side == "user" and t.surprise is not None]
        quarter = max(1, len(surprise) // 4)
        wins += np.mean(surprise[-quarter:]) <= np.mean(surprise[:quarter])
    print(f"dyad over {seeds} aligned seeds (M=9, diametral goal):")
    print(f"  user surprise last-quarter <= first-quarter in {wins}/{seeds} runs "
          f"({wins / seeds:.3f}); documented floor: 0.9")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    sub = ap.add_subparsers(dest="what", required=True)
    ne = sub.add_parser("number-entry")
    ne.add_argument("--seeds", type=int, default=500)
    dy = sub.add_parser("dyad")
    dy.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args()
    if args.what == "number-entry":
        calibrate_number_entry(args.seeds)
    else:
        calibrate_dyad(args.seeds)


if __name__ == "__main__":
    main()
