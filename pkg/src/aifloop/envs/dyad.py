"""Two agents as each other's environment: a goal-relay game on a ring.

A shared position z lives on a ring of size M. The user knows a goal g and
wants z there; the system cannot see g and must infer it from the user's
moves. Turns alternate user → system; each turn moves z by −1/0/+1.

The user is level-1: it models the system's intervening move as a uniform
disturbance folded into its transition model, observes z directly, and
prefers positions by exponential ring-distance decay around g.

The system is level-2: its hidden state joins (z, last user move, g); the
transition model carries the user-move likelihood, the softmax policy of
the level-1 user model evaluated at each (position, goal), and the
observation (z, move) is read off deterministically. Filtering then turns
observed moves into a posterior over g, and state preferences concentrated
on "z at the user's goal, whatever it is" drive the system to help.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..agent import Agent, AgentConfig
from ..genmodel import STATE_MODE, GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from ..inference import Belief
from ..planning import GREEDY_PRECISION, score_all_policies, EFE_STATE
from ..probmath import Dist, entropy, make_rng, softmax_neg

LEFT, RIGHT, STAY = 0, 1, 2
MOVE_DELTA = (-1, +1, 0)


@dataclass(frozen=True)
class DyadConfig:
    M: int = 9
    goal: int | str = "random"
    z0: int = 0
    max_rounds: int = 40
    seed: int = 0
    system_mode: str = "aif"  # aif | random | stay
    aligned: bool = True
    misalign_offset: int | None = None  # used when aligned=False; default M//2
    pref_decay: float = 2.0
    model_precision: float = 4.0
    user_horizon: int = 1
    user_precision: float = GREEDY_PRECISION
    system_horizon: int = 1
    system_precision: float = GREEDY_PRECISION

    def __post_init__(self):
        if self.M < 3:
            raise ValueError(f"ring size must be ≥ 3, got {self.M}")
        if isinstance(self.goal, int) and not 0 <= self.goal < self.M:
            raise ValueError(f"goal {self.goal} outside ring 0..{self.M - 1}")
        if not 0 <= self.z0 < self.M:
            raise ValueError(f"z0 {self.z0} outside ring 0..{self.M - 1}")
        if self.system_mode not in ("aif", "random", "stay"):
            raise ValueError(f"unknown system_mode {self.system_mode!r}")


def ring_distance(a: int, b: int, m: int) -> int:
    d = abs(a - b) % m
    return min(d, m - d)


def goal_preference(m: int, goal: int, decay: float) -> np.ndarray:
    w = np.array([np.exp(-decay * ring_distance(z, goal, m)) for z in range(m)])
    return w / w.sum()


@lru_cache(maxsize=32)
def _user_model_cached(m: int, goal: int, decay: float) -> GenerativeModel:
    """Level-1 user model: states = z, A = identity, partner move = uniform
    disturbance inside B."""
    b = np.zeros((3, m, m))
    for a, da in enumerate(MOVE_DELTA):
        for z in range(m):
            for ds in (-1, 0, 1):  # the system's move, modeled as uniform noise
                b[a, (z + da + ds) % m, z] += 1.0 / 3.0
    return GenerativeModel(
        num_states=m,
        num_actions=3,
        num_obs=m,
        A=ObservationModel(np.eye(m)),
        B=TransitionModel(b),
        C=PreferenceSchedule(STATE_MODE, (Dist(goal_preference(m, goal, decay)),)),
        D=Dist(np.full(m, 1.0 / m)),
        labels={"env": "dyad_user", "goal": goal},
    )


def build_user_model(cfg: DyadConfig, goal: int) -> GenerativeModel:
    return _user_model_cached(cfg.M, goal, cfg.pref_decay)


def build_user_agent(cfg: DyadConfig, goal: int, seed: int = 0) -> Agent:
    # diagnostic=True keeps the per-turn EFE tables: the policy-distribution
    # entropy emitted in the trace is a candidate freedom/agency measure.
    return Agent(
        build_user_model(cfg, goal),
        AgentConfig(horizon=cfg.user_horizon, precision=cfg.user_precision, seed=seed, diagnostic=True),
    )


@lru_cache(maxsize=32)
def _move_likelihood_cached(m: int, decay: float, model_precision: float) -> np.ndarray:
    """P(user move | z, g): softmax over the level-1 user's one-step EFEs."""
    table = np.zeros((m, m, 3))
    for g in range(m):
        model = _user_model_cached(m, g, decay)
        for z in range(m):
            belief = Belief(Dist(np.eye(m)[z]), 0)
            efes = score_all_policies(belief, model, 1, 0, EFE_STATE)
            table[z, g] = softmax_neg(efes, model_precision).weights
    return table


def user_move_likelihood(cfg: DyadConfig) -> np.ndarray:
    return _move_likelihood_cached(cfg.M, cfg.pref_decay, cfg.model_precision)


def _sys_state(z: int, move: int, g: int, m: int) -> int:
    return (z * 3 + move) * m + g


def _sys_obs(z: int, move: int) -> int:
    return z * 3 + move


@lru_cache(maxsize=32)
def _system_model_cached(
    m: int, decay: float, model_precision: float, offset: int, z0: int
) -> GenerativeModel:
    """Level-2 system model over (z, last user move, g).

    B: own move shifts z, then the modeled user moves from there with the
    level-1 likelihood; g never changes. A: the (z, move) pair is observed
    exactly. C: mass concentrated where z sits at (g + offset), offset 0
    is the aligned helper. D: uniform over g, with the user's opening move
    from z0 already folded in (the system's first observation arrives after
    the user has moved once).
    """
    moves = _move_likelihood_cached(m, decay, model_precision)
    n_states = 3 * m * m
    n_obs = 3 * m

    a_table = np.zeros((n_obs, n_states))
    for z in range(m):
        for mv in range(3):
            for g in range(m):
                a_table[_sys_obs(z, mv), _sys_state(z, mv, g, m)] = 1.0

    b = np.zeros((3, n_states, n_states))
    for a, da in enumerate(MOVE_DELTA):
        for z in range(m):
            for mv in range(3):
                for g in range(m):
                    src = _sys_state(z, mv, g, m)
                    z_mid = (z + da) % m
                    for mv2 in range(3):
                        dst = _sys_state((z_mid + MOVE_DELTA[mv2]) % m, mv2, g, m)
                        b[a, dst, src] += moves[z_mid, g, mv2]

    pref = np.zeros(n_states)
    for z in range(m):
        for mv in range(3):
            for g in range(m):
                w = goal_preference(m, (g + offset) % m, decay)[z]
                pref[_sys_state(z, mv, g, m)] = w / (3 * m)

    d = np.zeros(n_states)
    for g in range(m):
        for mv in range(3):
            d[_sys_state((z0 + MOVE_DELTA[mv]) % m, mv, g, m)] += moves[z0, g, mv] / m

    return GenerativeModel(
        num_states=n_states,
        num_actions=3,
        num_obs=n_obs,
        A=ObservationModel(a_table),
        B=TransitionModel(b),
        C=PreferenceSchedule(STATE_MODE, (Dist(pref / pref.sum()),)),
        D=Dist(d),
        labels={"env": "dyad_system", "M": m, "offset": offset},
    )


def build_system_model(cfg: DyadConfig) -> GenerativeModel:
    offset = 0
    if not cfg.aligned:
        offset = cfg.misalign_offset if cfg.misalign_offset is not None else cfg.M // 2
    return _system_model_cached(cfg.M, cfg.pref_decay, cfg.model_precision, offset, cfg.z0)


def build_system_agent(cfg: DyadConfig, seed: int = 0) -> Agent:
    return Agent(
        build_system_model(cfg),
        AgentConfig(horizon=cfg.system_horizon, precision=cfg.system_precision, seed=seed, diagnostic=True),
    )


def system_goal_marginal(weights, m: int) -> np.ndarray:
    """The system's posterior over the user's goal."""
    return np.asarray(weights).reshape(3 * m, m).sum(axis=0)


@dataclass
class DyadTurn:
    round: int
    side: str
    z_before: int
    action: int
    z_after: int
    surprise: float | None
    user_belief: list[float]
    system_goal_belief: list[float]
    policy_entropy: float


@dataclass
class DyadTrace:
    turns: list[DyadTurn] = field(default_factory=list)


@dataclass
class DyadSummary:
    seed: int
    M: int
    goal: int
    aligned: bool
    steps_to_goal: int
    reached: bool
    frac_goal_q4: float
    surprise_user: float
    surprise_system: float


def run_dyad(cfg: DyadConfig) -> tuple[DyadTrace, DyadSummary]:
    """Alternate user and system turns on the shared ring position."""
    seed_seq = np.random.SeedSequence(cfg.seed)
    user_seed, system_seed, env_seed = (int(s) for s in seed_seq.generate_state(3, np.uint64))
    env_rng = make_rng(env_seed)

    goal = int(env_rng.integers(0, cfg.M)) if cfg.goal == "random" else int(cfg.goal)
    user = build_user_agent(cfg, goal, seed=user_seed)
    system = build_system_agent(cfg, seed=system_seed) if cfg.system_mode == "aif" else None
    system_rng = make_rng(system_seed)

    z = cfg.z0
    trace = DyadTrace()
    steps_to_goal = 0 if z == goal else None

    def snapshot_user() -> list[float]:
        return user.belief.dist.tolist()

    def snapshot_system() -> list[float]:
        if system is None:
            return []
        return system_goal_marginal(system.belief.dist.weights, cfg.M).tolist()

    def policy_entropy_of(agent: Agent) -> float:
        if not agent.trace.steps or agent.trace.steps[-1].efe_table is None:
            return float("nan")
        return entropy(softmax_neg(agent.trace.steps[-1].efe_table, 1.0))

    for rnd in range(1, cfg.max_rounds + 1):
        z_before = z
        action_u = user.step(z)
        z = (z + MOVE_DELTA[action_u]) % cfg.M
        if steps_to_goal is None and z == goal:
            steps_to_goal = rnd
        trace.turns.append(
            DyadTurn(
                round=rnd,
                side="user",
                z_before=z_before,
                action=action_u,
                z_after=z,
                surprise=user.trace.steps[-1].surprise,
                user_belief=snapshot_user(),
                system_goal_belief=snapshot_system(),
                policy_entropy=policy_entropy_of(user),
            )
        )

        z_before = z
        sys_surprise = None
        if cfg.system_mode == "aif":
            action_s = system.step(_sys_obs(z, action_u))
            sys_surprise = system.trace.steps[-1].surprise
        elif cfg.system_mode == "random":
            action_s = int(system_rng.integers(0, 3))
        else:
            action_s = STAY
        z = (z + MOVE_DELTA[action_s]) % cfg.M
        if steps_to_goal is None and z == goal:
            steps_to_goal = rnd
        trace.turns.append(
            DyadTurn(
                round=rnd,
                side="system",
                z_before=z_before,
                action=action_s,
                z_after=z,
                surprise=sys_surprise,
                user_belief=snapshot_user(),
                system_goal_belief=snapshot_system(),
                policy_entropy=policy_entropy_of(system) if system is not None else float("nan"),
            )
        )

    reached = steps_to_goal is not None
    tail = trace.turns[-max(1, len(trace.turns) // 4) :]
    frac = sum(1 for t in tail if t.z_after == goal) / len(tail)
    user_surprises = [t.surprise for t in trace.turns if t.side == "user" and t.surprise is not None]
    sys_surprises = [t.surprise for t in trace.turns if t.side == "system" and t.surprise is not None]
    summary = DyadSummary(
        seed=cfg.seed,
        M=cfg.M,
        goal=goal,
        aligned=cfg.aligned,
        steps_to_goal=steps_to_goal if reached else cfg.max_rounds + 1,
        reached=reached,
        frac_goal_q4=frac,
        surprise_user=float(np.mean(user_surprises)) if user_surprises else float("nan"),
        surprise_system=float(np.mean(sys_surprises)) if sys_surprises else float("nan"),
    )
    return trace, summary


def run_dyad_batch(cfg: DyadConfig, seeds) -> list[DyadSummary]:
    out = []
    for seed in seeds:
        _, summary = run_dyad(
            DyadConfig(**{**cfg.__dict__, "seed": int(seed)})
        )
        out.append(summary)
    return out
