"""Policy enumeration, hypothetical rollout, expected free energy, selection.

A policy is a fixed-length action sequence. Each is scored by rolling the
current belief forward through the transition model (corrections are
skipped: hypothetical futures supply no observations) and accumulating
per-step terms, averaged over the horizon:

- observation mode: −(information gain) − (pragmatic value), preferences
  over observations;
- state mode: risk + ambiguity, preferences over states;
- state_info mode: risk + ambiguity − information gain. The risk+ambiguity
  form on its own scores an action only by where it puts the hypothetical
  belief, so it is blind to what an uninformative-state/informative-answer
  action could teach; adding the expected information gain restores the
  epistemic drive (free energy as preference alignment plus what could be
  learned).

Information gain at a step never conditions on imagined observations from
earlier steps. Scores go through a softmax over negated values (explicit
precision; 1.0 reproduces the unscaled form). A precision at or above
GREEDY_PRECISION switches to exact argmin selection with lowest-index
tie-breaking, which softmax sampling cannot guarantee for exact ties.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .genmodel import (
    OBSERVATION_MODE,
    STATE_MODE,
    GenerativeModel,
    ObservationModel,
    preference_at,
)
from .inference import Belief, correct, predict
from .probmath import PROB_FLOOR, Dist, expected_log, floored, kl, sample_index, softmax_neg

GREEDY_PRECISION = 1e6

EFE_OBSERVATION = "observation"
EFE_STATE = "state"
EFE_STATE_INFO = "state_info"

_MODE_CODES = {EFE_OBSERVATION: 0, EFE_STATE: 1, EFE_STATE_INFO: 2}


class BudgetExceededError(RuntimeError):
    """The policy space is larger than the configured budget; reduce the
    horizon or raise the budget, there is no silent pruning."""


class ModeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    actions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __getitem__(self, i):
        return self.actions[i]


@dataclass(frozen=True)
class EfeBreakdown:
    """Per-step components of one policy's expected free energy.

    Observation mode fills info_gain and pragmatic_value; state mode fills
    risk and ambiguity; state_info fills all three of info_gain, risk,
    ambiguity. `efe` is the horizon-average of the per-step terms.
    """

    mode: str
    efe: float
    info_gain: tuple[float, ...] = ()
    pragmatic_value: tuple[float, ...] = ()
    risk: tuple[float, ...] = ()
    ambiguity: tuple[float, ...] = ()

    def step_terms(self) -> list[float]:
        if self.mode == EFE_OBSERVATION:
            return [-ig - pv for ig, pv in zip(self.info_gain, self.pragmatic_value)]
        if self.mode == EFE_STATE:
            return [r + a for r, a in zip(self.risk, self.ambiguity)]
        return [r + a - ig for r, a, ig in zip(self.risk, self.ambiguity, self.info_gain)]


@dataclass(frozen=True)
class PolicySet:
    """Every candidate policy with its score, plus the selection outcome."""

    policies: tuple[Policy, ...]
    efes: tuple[float, ...]
    dist: Dist
    chosen_index: int
    chosen: EfeBreakdown


def enumerate_policies(num_actions: int, horizon: int, budget: int = 100_000) -> list[Policy]:
    """All num_actions**horizon action sequences in lexicographic order."""
    if horizon < 1:
        raise ValueError(f"horizon must be ≥ 1, got {horizon}")
    count = num_actions**horizon
    if count > budget:
        raise BudgetExceededError(f"{num_actions}^{horizon} = {count} policies exceeds budget {budget}")
    return [Policy(p) for p in itertools.product(range(num_actions), repeat=horizon)]


def rollout_beliefs(q: Belief, policy: Policy, m: GenerativeModel) -> list[Belief]:
    """Hypothetical beliefs after each policy action; corrections skipped."""
    out = []
    cur = q
    for a in policy:
        cur = predict(cur, a, m.B)
        out.append(cur)
    return out


def _resolve_table(a_model: ObservationModel | np.ndarray, action: int | None) -> np.ndarray:
    if isinstance(a_model, ObservationModel):
        return a_model.for_action(action if a_model.per_action else None)
    return np.asarray(a_model, dtype=np.float64)


def expected_information_gain(q: Belief | Dist, a_model, action: int | None = None) -> float:
    """Σ_o P(o)·KL(posterior_o ‖ prior): how much one observation could teach.

    Exact sum over observation branches; branches with P(o)=0 contribute 0.
    """
    dist = q.dist if isinstance(q, Belief) else q
    table = _resolve_table(a_model, action)
    shared = ObservationModel(table)
    belief = Belief(dist, 0)
    p_obs = table @ dist.weights
    total = 0.0
    for o in range(table.shape[0]):
        if p_obs[o] <= 0:
            continue
        total += p_obs[o] * kl(correct(belief, o, shared).dist, dist)
    return total


def pragmatic_value_obs(q: Belief | Dist, a_model, c: Dist, action: int | None = None) -> float:
    """Expected log-preference of the predicted observation, Σ_o P(o)·ln c[o]."""
    dist = q.dist if isinstance(q, Belief) else q
    table = _resolve_table(a_model, action)
    p_obs = table @ dist.weights
    return expected_log(Dist(p_obs / p_obs.sum()), c)


def observation_column_entropy(table: np.ndarray) -> np.ndarray:
    """H[P(o|s)] per state column, the ambiguity weights."""
    t = np.asarray(table, dtype=np.float64)
    nz = t > 0
    logs = np.zeros_like(t)
    logs[nz] = np.log(t[nz])
    return -(t * logs).sum(axis=0)


def _require_mode(m: GenerativeModel, needed: str, form: str) -> None:
    if m.C.mode != needed:
        raise ModeMismatchError(f"{form} needs preferences over {needed}, model has {m.C.mode!r}")


def efe_observation_form(q: Belief, policy: Policy, m: GenerativeModel, t0: int) -> EfeBreakdown:
    """Observation-preference EFE: −(info gain) − (pragmatic value), averaged."""
    _require_mode(m, OBSERVATION_MODE, "efe_observation_form")
    igs, pvs = [], []
    for j, belief in enumerate(rollout_beliefs(q, policy, m)):
        a = policy[j]
        igs.append(expected_information_gain(belief, m.A, a))
        pvs.append(pragmatic_value_obs(belief, m.A, preference_at(m.C, t0 + j + 1), a))
    terms = [-ig - pv for ig, pv in zip(igs, pvs)]
    return EfeBreakdown(
        mode=EFE_OBSERVATION,
        efe=float(np.sum(terms) / len(policy)),
        info_gain=tuple(igs),
        pragmatic_value=tuple(pvs),
    )


def _state_steps(q: Belief, policy: Policy, m: GenerativeModel, t0: int, with_info: bool):
    risks, ambs, igs = [], [], []
    for j, belief in enumerate(rollout_beliefs(q, policy, m)):
        a = policy[j]
        table = m.A.for_action(a if m.A.per_action else None)
        risks.append(kl(belief.dist, preference_at(m.C, t0 + j + 1)))
        ambs.append(float(belief.dist.weights @ observation_column_entropy(table)))
        if with_info:
            igs.append(expected_information_gain(belief, m.A, a))
    return risks, ambs, igs


def efe_state_form(q: Belief, policy: Policy, m: GenerativeModel, t0: int) -> EfeBreakdown:
    """Risk + ambiguity against state preferences for one policy."""
    _require_mode(m, STATE_MODE, "efe_state_form")
    risks, ambs, _ = _state_steps(q, policy, m, t0, with_info=False)
    terms = [r + a for r, a in zip(risks, ambs)]
    return EfeBreakdown(
        mode=EFE_STATE,
        efe=float(np.sum(terms) / len(policy)),
        risk=tuple(risks),
        ambiguity=tuple(ambs),
    )


def efe_state_info_form(q: Belief, policy: Policy, m: GenerativeModel, t0: int) -> EfeBreakdown:
    """Risk + ambiguity − information gain: state preferences with the
    epistemic term restored (see module docstring)."""
    _require_mode(m, STATE_MODE, "efe_state_info_form")
    risks, ambs, igs = _state_steps(q, policy, m, t0, with_info=True)
    terms = [r + a - ig for r, a, ig in zip(risks, ambs, igs)]
    return EfeBreakdown(
        mode=EFE_STATE_INFO,
        efe=float(np.sum(terms) / len(policy)),
        info_gain=tuple(igs),
        risk=tuple(risks),
        ambiguity=tuple(ambs),
    )


_FORMS = {
    EFE_OBSERVATION: efe_observation_form,
    EFE_STATE: efe_state_form,
    EFE_STATE_INFO: efe_state_info_form,
}


def efe_for_policy(q: Belief, policy: Policy, m: GenerativeModel, t0: int, efe_mode: str) -> EfeBreakdown:
    if efe_mode not in _FORMS:
        raise ModeMismatchError(f"unknown efe mode {efe_mode!r}")
    return _FORMS[efe_mode](q, policy, m, t0)


def default_efe_mode(m: GenerativeModel) -> str:
    return EFE_OBSERVATION if m.C.mode == OBSERVATION_MODE else EFE_STATE


def score_all_policies(
    q: Belief, m: GenerativeModel, horizon: int, t0: int, efe_mode: str, backend: str | None = None
) -> np.ndarray:
    """EFE of every length-`horizon` policy, lexicographic order, via the
    active scoring backend (compiled extension when built, numpy otherwise)."""
    if efe_mode == EFE_OBSERVATION:
        _require_mode(m, OBSERVATION_MODE, "observation-mode scoring")
    else:
        _require_mode(m, STATE_MODE, f"{efe_mode}-mode scoring")
    kernel = _kernels.active() if backend is None else _kernels.get(backend)
    a_tables = m.A.table if m.A.per_action else m.A.table[None, :, :]
    prefs_log = np.stack(
        [np.log(floored(preference_at(m.C, t0 + j + 1).weights)) for j in range(horizon)]
    )
    col_ent = np.stack([observation_column_entropy(a_tables[i]) for i in range(a_tables.shape[0])])
    return np.asarray(
        kernel.score_policy_tree(
            a_tables,
            m.A.per_action,
            m.B.stack,
            q.dist.weights,
            horizon,
            _MODE_CODES[efe_mode],
            prefs_log,
            col_ent,
            PROB_FLOOR,
        ),
        dtype=np.float64,
    )


def policy_distribution(efes, precision: float = 1.0) -> Dist:
    """Softmax over negated EFE scores."""
    return softmax_neg(efes, precision)


def select_action(q: Belief, m: GenerativeModel, cfg, rng) -> tuple[int, PolicySet]:
    """Score every policy, pick one, return its first action plus the table.

    cfg needs horizon, precision, policy_budget and efe_mode attributes (see
    agent.AgentConfig). At precision ≥ GREEDY_PRECISION the argmin policy is
    taken outright (ties to the lowest policy index) and the generator is
    left untouched; below it, a policy is sampled from the softmax.
    """
    efe_mode = cfg.efe_mode or default_efe_mode(m)
    policies = enumerate_policies(m.num_actions, cfg.horizon, cfg.policy_budget)
    efes = score_all_policies(q, m, cfg.horizon, q.timestep, efe_mode)
    dist = policy_distribution(efes, min(cfg.precision, GREEDY_PRECISION))
    if cfg.precision >= GREEDY_PRECISION:
        idx = int(np.argmin(efes))
    else:
        idx = sample_index(dist, rng)
    chosen = efe_for_policy(q, policies[idx], m, q.timestep, efe_mode)
    pset = PolicySet(
        policies=tuple(policies),
        efes=tuple(float(g) for g in efes),
        dist=dist,
        chosen_index=idx,
        chosen=chosen,
    )
    return policies[idx][0], pset
