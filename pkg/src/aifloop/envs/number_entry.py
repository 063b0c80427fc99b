"""Number selection over a corrupted binary channel.

The agent sits between a user thinking of a number in 0..N−1 and a system
that needs it entered. It can display a cutpoint c ("is your number above
or below c?") and receives a single bit back, flipped i.i.d. with an
unknown probability; or it can commit to a number. Hidden state is the
(target, channel-noise) pair on a discrete noise grid, plus two absorbing
outcome states reached by committing. Preferences live on states: almost
all mass on the correct-commit state, nearly none on the wrong-commit
state, a thin residual spread over the live states so that lingering keeps
costing risk. Planning runs in state_info mode: cutpoint choice is driven
by expected information gain about (target, noise), commitment by risk.

Observations: 0 = "below", 1 = "above", 2 = "committed". Actions: ask(c)
for c in 1..N−1 (indices 0..N−2), then commit(n) for n in 0..N−1. Answer
law after ask(c): P(above | target n, noise ε) = (1−ε)·[n ≥ c] + ε·[n < c].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..agent import Agent, AgentConfig, EpisodeTrace, run_episode
from ..genmodel import STATE_MODE, GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from ..planning import EFE_STATE_INFO, GREEDY_PRECISION
from ..probmath import Dist, make_rng

BELOW, ABOVE, COMMITTED = 0, 1, 2


class GridEmptyError(ValueError):
    pass


@dataclass(frozen=True)
class NumberEntryConfig:
    N: int = 16
    epsilon_true: float = 0.2
    epsilon_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3)
    seed: int = 0
    preference_strength: float = 0.95
    wrong_commit_mass: float = 1e-6
    horizon: int = 2
    precision: float = GREEDY_PRECISION
    max_steps: int = 64

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be ≥ 2, got {self.N}")
        if not self.epsilon_grid:
            raise GridEmptyError("epsilon grid is empty")
        grid = tuple(float(e) for e in self.epsilon_grid)
        if any(not 0 <= e < 0.5 for e in grid):
            raise ValueError(f"grid values must lie in [0, 0.5), got {grid}")
        if list(grid) != sorted(set(grid)):
            raise ValueError("grid must be sorted ascending with distinct values")
        if not 0 <= self.epsilon_true < 0.5:
            raise ValueError(f"epsilon_true must lie in [0, 0.5), got {self.epsilon_true}")
        if not 0 < self.preference_strength < 1:
            raise ValueError("preference_strength must be in (0, 1)")
        if not 0 <= self.wrong_commit_mass < 1 - self.preference_strength:
            raise ValueError("wrong_commit_mass must leave residual live mass")
        object.__setattr__(self, "epsilon_grid", grid)

    @property
    def num_asks(self) -> int:
        return self.N - 1

    @property
    def num_actions(self) -> int:
        return self.N - 1 + self.N

    def is_ask(self, action: int) -> bool:
        return 0 <= action < self.N - 1

    def ask_cutpoint(self, action: int) -> int:
        return action + 1

    def ask_action(self, cutpoint: int) -> int:
        if not 1 <= cutpoint <= self.N - 1:
            raise ValueError(f"cutpoint must be in 1..{self.N - 1}, got {cutpoint}")
        return cutpoint - 1

    def commit_target(self, action: int) -> int:
        return action - (self.N - 1)

    def commit_action(self, n: int) -> int:
        return self.N - 1 + n


def build_model(cfg: NumberEntryConfig, preference_strength: float | None = None) -> GenerativeModel:
    """The agent's generative model: |S| = N·|grid|+2, |A| = 2N−1, |O| = 3."""
    n_num, grid = cfg.N, cfg.epsilon_grid
    g = len(grid)
    n_live = n_num * g
    n_states = n_live + 2
    done_ok, done_bad = n_live, n_live + 1
    n_actions = cfg.num_actions
    strength = cfg.preference_strength if preference_strength is None else preference_strength

    a_tables = np.zeros((n_actions, 3, n_states))
    b_stack = np.zeros((n_actions, n_states, n_states))

    targets = np.repeat(np.arange(n_num), g)
    eps = np.tile(np.asarray(grid), n_num)
    identity = np.eye(n_states)
    for c in range(1, n_num):
        a = cfg.ask_action(c)
        p_above = np.where(targets >= c, 1.0 - eps, eps)
        a_tables[a, ABOVE, :n_live] = p_above
        a_tables[a, BELOW, :n_live] = 1.0 - p_above
        a_tables[a, COMMITTED, done_ok:] = 1.0
        b_stack[a] = identity
    for n in range(n_num):
        a = cfg.commit_action(n)
        a_tables[a, COMMITTED, :] = 1.0
        hit = targets == n
        b_stack[a, done_ok, :n_live][hit] = 1.0
        b_stack[a, done_bad, :n_live][~hit] = 1.0
        b_stack[a, done_ok, done_ok] = 1.0
        b_stack[a, done_bad, done_bad] = 1.0

    prefs = np.full(n_states, (1.0 - strength - cfg.wrong_commit_mass) / n_live)
    prefs[done_ok] = strength
    prefs[done_bad] = cfg.wrong_commit_mass

    d = np.zeros(n_states)
    d[:n_live] = 1.0 / n_live

    return GenerativeModel(
        num_states=n_states,
        num_actions=n_actions,
        num_obs=3,
        A=ObservationModel(a_tables, per_action=True),
        B=TransitionModel(b_stack),
        C=PreferenceSchedule(STATE_MODE, (Dist(prefs),)),
        D=Dist(d),
        labels={"env": "number_entry", "N": n_num, "grid": list(grid)},
    )


def entry_agent_config(cfg: NumberEntryConfig, seed: int = 0, diagnostic: bool = False) -> AgentConfig:
    return AgentConfig(
        horizon=cfg.horizon,
        precision=cfg.precision,
        policy_budget=max(200_000, cfg.num_actions**cfg.horizon),
        efe_mode=EFE_STATE_INFO,
        seed=seed,
        diagnostic=diagnostic,
    )


def respond(cfg: NumberEntryConfig, target: int, cutpoint: int, rng: np.random.Generator) -> int:
    """The user's (possibly corrupted) answer bit: flip w.p. epsilon_true."""
    truthful = ABOVE if target >= cutpoint else BELOW
    if cfg.epsilon_true > 0 and rng.random() < cfg.epsilon_true:
        return ABOVE if truthful == BELOW else BELOW
    return truthful


def target_marginal(weights, cfg: NumberEntryConfig) -> np.ndarray:
    """Belief mass per candidate number, summed over the noise grid."""
    w = np.asarray(weights, dtype=np.float64)
    live = w[: cfg.N * len(cfg.epsilon_grid)]
    return live.reshape(cfg.N, len(cfg.epsilon_grid)).sum(axis=1)


def _binary_entropy(p: float) -> float:
    total = 0.0
    if p > 0:
        total -= p * np.log(p)
    if p < 1:
        total -= (1 - p) * np.log(1 - p)
    return float(total)


def oracle_optimal_cutpoint(belief_over_targets: Dist, epsilon: float) -> tuple[int, float]:
    """Brute-force scan: the cutpoint with the largest exact expected
    information gain about the target, ties to the lowest cutpoint.

    Derived from the channel identity I(target; answer) = H(answer) −
    H(answer | target) = H_b(ε + (1−2ε)·P(n ≥ c)) − H_b(ε), a different
    route than the planner's expected-KL sum, usable as an oracle for it.
    """
    q = np.asarray(belief_over_targets.weights)
    n_num = q.size
    h_eps = _binary_entropy(epsilon)
    best_c, best_gain = 1, -np.inf
    for c in range(1, n_num):
        p_ge = float(q[c:].sum())
        p_above = epsilon + (1.0 - 2.0 * epsilon) * p_ge
        gain = _binary_entropy(p_above) - h_eps
        if gain > best_gain:
            best_c, best_gain = c, gain
    return best_c, float(best_gain)


class NumberEntryEnv:
    """Environment half of the loop: holds the true target and the channel."""

    def __init__(self, cfg: NumberEntryConfig, target: int, rng: np.random.Generator):
        if not 0 <= target < cfg.N:
            raise ValueError(f"target {target} out of range 0..{cfg.N - 1}")
        self.cfg = cfg
        self.target = target
        self.rng = rng
        self.committed: int | None = None
        self.queries = 0

    def reset(self):
        self.committed = None
        self.queries = 0
        return None  # the user volunteers nothing until asked

    def step(self, action: int):
        if self.cfg.is_ask(action):
            self.queries += 1
            return respond(self.cfg, self.target, self.cfg.ask_cutpoint(action), self.rng), False
        self.committed = self.cfg.commit_target(action)
        return COMMITTED, True


@dataclass
class EntryOutcome:
    target: int
    committed: int | None
    correct: bool
    queries: int
    cum_surprise: float
    max_steps_reached: bool
    ms: float = 0.0


def derive_seeds(seed: int, count: int = 2) -> list[int]:
    """Independent child seeds from one master seed (splittable stream)."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count, np.uint64)]


def run_entry_episode(
    cfg: NumberEntryConfig,
    target: int | str = "random",
    seed: int | None = None,
    agent_cfg: AgentConfig | None = None,
    model: GenerativeModel | None = None,
) -> tuple[EpisodeTrace, EntryOutcome]:
    """One full ask/commit episode against the simulated noisy user."""
    env_seed, agent_seed = derive_seeds(cfg.seed if seed is None else seed)
    env_rng = make_rng(env_seed)
    if target == "random":
        target = int(env_rng.integers(0, cfg.N))
    if agent_cfg is None:
        agent_cfg = entry_agent_config(cfg, seed=agent_seed)
    agent = Agent(build_model(cfg) if model is None else model, agent_cfg)
    env = NumberEntryEnv(cfg, int(target), env_rng)
    trace = run_episode(agent, env, cfg.max_steps)
    outcome = EntryOutcome(
        target=env.target,
        committed=env.committed,
        correct=env.committed == env.target,
        queries=env.queries,
        cum_surprise=trace.cumulative_surprise(),
        max_steps_reached=trace.max_steps_reached,
        ms=float(sum(s.ms for s in trace.steps)),
    )
    return trace, outcome


def run_entry_batch(cfg: NumberEntryConfig, seeds, model: GenerativeModel | None = None):
    """One episode per seed (shared model build); rows in seed order."""
    model = build_model(cfg) if model is None else model
    results = []
    for seed in seeds:
        trace, outcome = run_entry_episode(cfg, target="random", seed=seed, model=model)
        results.append((seed, trace, outcome))
    return results


def baseline_level_reps(num_levels: int, num_queries: int) -> list[int]:
    """Spread a query budget round-robin over bisection levels, extras first."""
    base, extra = divmod(num_queries, num_levels)
    return [base + (1 if i < extra else 0) for i in range(num_levels)]


def _majority_correct_prob(reps: int, epsilon: float) -> float:
    """P(a repetition-coded level decodes correctly); even-split ties are
    resolved toward 'below', which is right for half the targets."""
    from scipy.stats import binom

    if reps == 0:
        return 0.5
    k = np.arange(reps + 1)
    pmf_truthful = binom.pmf(k, reps, 1.0 - epsilon)  # votes matching the truth
    correct_if_above = pmf_truthful[k > reps / 2].sum()  # truth=above needs strict majority
    correct_if_below = pmf_truthful[k >= reps / 2].sum()  # truth=below wins ties
    return float(0.5 * (correct_if_above + correct_if_below))


def baseline_accuracy(n_num: int, epsilon: float, num_queries: int) -> float:
    """Exact accuracy of repetition-coded bisection-then-commit at a budget.

    Bisection over a power-of-two range resolves one independent fair bit
    per level, so accuracy is the product of per-level majority-decode
    probabilities. This is the fixed non-adaptive baseline the planner is
    compared against.
    """
    num_levels = int(np.ceil(np.log2(n_num)))
    reps = baseline_level_reps(num_levels, num_queries)
    acc = 1.0
    for r in reps:
        acc *= _majority_correct_prob(r, epsilon)
    return acc


def simulate_baseline_episode(cfg: NumberEntryConfig, target: int, num_queries: int, rng) -> bool:
    """Monte-carlo twin of baseline_accuracy for cross-checking it."""
    num_levels = int(np.ceil(np.log2(cfg.N)))
    reps = baseline_level_reps(num_levels, num_queries)
    lo, hi = 0, cfg.N
    for r in reps:
        mid = (lo + hi) // 2
        votes_above = sum(respond(cfg, target, mid, rng) == ABOVE for _ in range(r))
        if votes_above > r / 2:
            lo = mid
        else:
            hi = mid
    return lo == target
