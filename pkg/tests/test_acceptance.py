"""Acceptance suite: one test and one printed pass/fail line per criterion.

Run with `pytest tests/test_acceptance.py -v -s`. Every tolerance and
runtime budget is pinned here; oracles come from tests/oracles.py and are
independent of the code paths they check.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
from scipy.stats import mannwhitneyu

from aifloop.blanket import SampleTable, grow_shrink
from aifloop.cli import main as cli_main
from aifloop.envs.dyad import DyadConfig, run_dyad_batch
from aifloop.envs.number_entry import (
    NumberEntryConfig,
    baseline_accuracy,
    build_model,
    oracle_optimal_cutpoint,
    run_entry_episode,
)
from aifloop.genmodel import GenerativeModel, PreferenceSchedule
from aifloop.inference import Belief, filter
from aifloop.planning import (
    GREEDY_PRECISION,
    efe_observation_form,
    efe_state_form,
    enumerate_policies,
    select_action,
)
from aifloop.probmath import Dist, make_rng
from conftest import random_model, sample_history
from oracles import (
    efe_observation_bruteforce,
    joint_posterior,
    max_info_gain_action,
    sample_chain_dag,
)


@contextmanager
def criterion(name: str, budget_s: float):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - t0
    assert elapsed < budget_s, f"{name}: {elapsed:.1f}s exceeded the {budget_s:.0f}s budget"
    print(f"[PASS] {name} ({elapsed:.1f}s)")


class _Greedy:
    def __init__(self, horizon=1):
        self.horizon = horizon
        self.precision = GREEDY_PRECISION
        self.policy_budget = 100_000
        self.efe_mode = None


def test_criterion_01_filter_matches_joint_enumeration():
    with criterion("1 filter-oracle equivalence (200 models, 1e-9)", 10):
        rng = make_rng(101)
        for _ in range(200):
            m = random_model(
                rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)), int(rng.integers(2, 5))
            )
            k = int(rng.integers(0, 5))
            actions, observations = sample_history(rng, m, k)
            got = filter(m.D, actions, observations, m).dist.weights
            want = joint_posterior(m, actions, observations)
            assert np.max(np.abs(got - np.array(want))) < 1e-9


def test_criterion_02_efe_matches_bruteforce():
    with criterion("2 EFE-oracle equivalence (100 models, 1e-9)", 60):
        rng = make_rng(102)
        for _ in range(100):
            m = random_model(
                rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)), int(rng.integers(2, 5))
            )
            q = Belief(Dist(rng.dirichlet(np.ones(m.num_states))), 0)
            horizon = int(rng.integers(1, 4))
            for policy in enumerate_policies(m.num_actions, horizon):
                got = efe_observation_form(q, policy, m, 0).efe
                want = efe_observation_bruteforce(q.dist.weights, policy, m, 0)
                assert abs(got - want) < 1e-9


def test_criterion_03_identity_a_equivalence():
    with criterion("3 identity-A equivalence of both EFE forms (100 instances, 1e-9)", 60):
        rng = make_rng(103)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            num_actions = int(rng.integers(1, 4))
            b = rng.random((num_actions, n, n)) + 0.05
            b /= b.sum(axis=1, keepdims=True)
            c = rng.dirichlet(np.ones(n))
            d = Dist(rng.dirichlet(np.ones(n)))
            from aifloop.genmodel import ObservationModel, TransitionModel

            obs_m = GenerativeModel(
                n, num_actions, n, ObservationModel(np.eye(n)), TransitionModel(b),
                PreferenceSchedule("observations", (Dist(c),)), d,
            )
            state_m = GenerativeModel(
                n, num_actions, n, obs_m.A, obs_m.B, PreferenceSchedule("states", (Dist(c),)), d,
            )
            q = Belief(Dist(rng.dirichlet(np.ones(n))), 0)
            horizon = int(rng.integers(1, 4))
            for policy in enumerate_policies(num_actions, horizon):
                a = efe_observation_form(q, policy, obs_m, 0).efe
                bb = efe_state_form(q, policy, state_m, 0).efe
                assert abs(a - bb) < 1e-9


def test_criterion_04_pure_exploration_matches_max_info_gain():
    with criterion("4 pure exploration = oracle argmax info gain (100 instances)", 60):
        rng = make_rng(104)
        for _ in range(100):
            m = random_model(
                rng, int(rng.integers(2, 5)), int(rng.integers(2, 4)), int(rng.integers(2, 5))
            )
            flat = GenerativeModel(
                m.num_states, m.num_actions, m.num_obs, m.A, m.B,
                PreferenceSchedule("observations", (Dist(np.full(m.num_obs, 1 / m.num_obs)),)),
                m.D,
            )
            q = Belief(Dist(rng.dirichlet(np.ones(m.num_states))), 0)
            action, _ = select_action(q, flat, _Greedy(horizon=1), make_rng(0))
            oracle_action, _ = max_info_gain_action(q.dist.weights, flat)
            assert action == oracle_action


def test_criterion_05_bisection_reproduction():
    with criterion("5 bisection: first cutpoint 8, gain ln2, 4 queries, correct", 30):
        cfg = NumberEntryConfig(N=16, epsilon_true=0.0, epsilon_grid=(0.0,), horizon=1)
        model = build_model(cfg)
        c, gain = oracle_optimal_cutpoint(Dist(np.full(16, 1 / 16)), 0.0)
        assert c == 8 and abs(gain - math.log(2)) < 1e-9
        for target in range(16):
            trace, outcome = run_entry_episode(cfg, target=target, seed=0, model=model)
            cutpoints = [cfg.ask_cutpoint(a) for a in trace.actions() if cfg.is_ask(a)]
            assert cutpoints[0] == 8
            assert abs(trace.steps[0].info_gain[0] - math.log(2)) < 1e-9
            assert outcome.queries == 4 and outcome.correct
        for seed in range(100):
            trace, outcome = run_entry_episode(cfg, target="random", seed=seed, model=model)
            cutpoints = [cfg.ask_cutpoint(a) for a in trace.actions() if cfg.is_ask(a)]
            assert cutpoints[0] == 8
            assert outcome.queries == 4 and outcome.correct


def test_criterion_06_noisy_channel_beats_baseline():
    with criterion("6 noisy channel beats repetition-coded bisection (500 seeds)", 300):
        cfg = NumberEntryConfig(N=16, epsilon_true=0.2, epsilon_grid=(0.0, 0.1, 0.2, 0.3))
        model = build_model(cfg)
        correct, queries = [], []
        for seed in range(500):
            _, outcome = run_entry_episode(cfg, target="random", seed=seed, model=model)
            correct.append(outcome.correct)
            queries.append(outcome.queries)
        accuracy = float(np.mean(correct))
        mean_q = float(np.mean(queries))
        base_ceil = baseline_accuracy(16, 0.2, math.ceil(mean_q))
        base_floor = baseline_accuracy(16, 0.2, math.floor(mean_q))
        print(
            f"\n    agent accuracy {accuracy:.4f} at mean {mean_q:.2f} queries; "
            f"baseline {base_ceil:.4f} at {math.ceil(mean_q)} (floor {base_floor:.4f} at {math.floor(mean_q)})"
        )
        assert accuracy > base_ceil
        assert accuracy > base_floor


def test_criterion_07_dyad_system_beats_random():
    with criterion("7 dyad: aif system beats uniform-random (200 seeds, p<0.01)", 300):
        seeds = range(200)
        aif = run_dyad_batch(DyadConfig(M=9, goal=4, z0=0, system_mode="aif"), seeds)
        rnd = run_dyad_batch(DyadConfig(M=9, goal=4, z0=0, system_mode="random"), seeds)
        a = [s.steps_to_goal for s in aif]
        r = [s.steps_to_goal for s in rnd]
        p = mannwhitneyu(a, r, alternative="less").pvalue
        print(f"\n    aif median {np.median(a)}, random median {np.median(r)}, rank-sum p = {p:.3g}")
        assert np.median(a) < np.median(r)
        assert p < 0.01


def test_criterion_08_blanket_recovery():
    with criterion("8 blanket recovery {A,C,D} in >=90/100 seeds", 180):
        hits = 0
        for seed in range(100):
            table = SampleTable(["A", "B", "C", "D"], sample_chain_dag(make_rng(5000 + seed), 100_000))
            result = grow_shrink(table, "B", alpha=0.01, rng=make_rng(seed))
            hits += result.blanket == ["A", "C", "D"]
        print(f"\n    exact recovery in {hits}/100 seeds")
        assert hits >= 90


def test_criterion_09_batch_determinism(tmp_path):
    with criterion("9 batch outputs byte-identical across re-runs and workers", 120):
        base = [
            "simulate", "--seeds", "8", "--N", "8", "--eps-true", "0.2",
            "--grid", "0,0.1,0.2", "--horizon", "1", "--diagnostic",
        ]
        outs = []
        for name, workers in (("r1", "1"), ("r2", "1"), ("r3", "3")):
            out = tmp_path / name
            assert cli_main([*base, "--out", str(out), "--workers", workers]) == 0
            outs.append(out)
        ref_csv = (outs[0] / "number_entry.csv").read_bytes()
        ref_traces = [(outs[0] / f"number_entry_trace_{s}.jsonl").read_bytes() for s in range(8)]
        for out in outs[1:]:
            assert (out / "number_entry.csv").read_bytes() == ref_csv
            for s in range(8):
                assert (out / f"number_entry_trace_{s}.jsonl").read_bytes() == ref_traces[s]

        dyad_outs = []
        for name in ("d1", "d2"):
            out = tmp_path / name
            assert cli_main(["dyad", "--seeds", "5", "--M", "9", "--out", str(out)]) == 0
            dyad_outs.append(out)
        assert (dyad_outs[0] / "dyad.csv").read_bytes() == (dyad_outs[1] / "dyad.csv").read_bytes()


def test_criterion_10_live_loop_round_trip():
    # secondary-tagged criterion, but it exercises only the service side:
    # a scripted truthful client for target 11 sees bisection-consistent
    # cutpoints and a correct commit; every belief event sums to 1 ± 1e-6.
    with criterion("10 live WebSocket loop: queries 8/12/10/11, commit 11", 60):
        import asyncio

        from aiohttp.test_utils import TestClient, TestServer

        from aifloop.service import ServiceConfig, build_app

        async def body():
            client = TestClient(TestServer(build_app(ServiceConfig())))
            await client.start_server()
            doc = await (await client.post("/session", json={})).json()
            ws = await client.ws_connect(f"/session/{doc['id']}/ws")
            target, queries, commit = 11, [], None
            while commit is None:
                msg = json.loads((await ws.receive()).data)
                if msg["type"] == "belief":
                    assert abs(sum(msg["dist"]) - 1) <= 1e-6
                elif msg["type"] == "query":
                    queries.append(msg["cutpoint"])
                    await ws.send_json({"type": "response", "bit": 1 if target >= msg["cutpoint"] else 0})
                elif msg["type"] == "commit":
                    commit = msg["n"]
            await ws.close()
            await client.close()
            return queries, commit

        queries, commit = asyncio.run(body())
        assert queries == [8, 12, 10, 11]
        assert commit == 11
