"""Exact Bayesian filtering over hidden states: predict, correct, filter.

predict pushes a belief through the transition model for a chosen action;
correct conditions it on an observation and renormalizes. The timestep on a
belief counts predicts: corrections refine the current time, predictions
advance it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genmodel import GenerativeModel, ObservationModel, TransitionModel
from .probmath import Dist


class ActionOutOfRangeError(IndexError):
    pass


class ObservationOutOfRangeError(IndexError):
    pass


class ImpossibleObservationError(ValueError):
    """The model assigns zero probability to what was observed.

    Deliberately not a silent renormalization: in a transduction setting a
    zero-probability observation means the forward model is wrong, and that
    is worth surfacing.
    """


@dataclass(frozen=True)
class Belief:
    """The agent's categorical posterior over hidden states at a timestep."""

    dist: Dist
    timestep: int = 0


def predict(q: Belief, a: int, b: TransitionModel) -> Belief:
    """Push the belief through one action: out[s2] = Σ_s1 P(s2|s1,a)·q[s1]."""
    if not 0 <= a < b.num_actions:
        raise ActionOutOfRangeError(f"action {a} out of range [0, {b.num_actions})")
    w = b.matrix(a) @ q.dist.weights
    return Belief(Dist(w / w.sum()), q.timestep + 1)


def observation_likelihood(q: Belief, a_model: ObservationModel, action: int | None = None) -> np.ndarray:
    """Predicted observation probabilities P(o) = Σ_s P(o|s)·q[s]."""
    return a_model.for_action(action) @ q.dist.weights


def correct(q: Belief, o: int, a_model: ObservationModel, action: int | None = None) -> Belief:
    """Condition on observation o: out[s] ∝ P(o|s)·q[s]. Timestep unchanged.

    For per-action observation models, `action` names the action that
    produced this observation.
    """
    belief, _ = correct_with_evidence(q, o, a_model, action)
    return belief


def correct_with_evidence(
    q: Belief, o: int, a_model: ObservationModel, action: int | None = None
) -> tuple[Belief, float]:
    """correct() plus the normalizing constant P(o) (the evidence)."""
    table = a_model.for_action(action)
    if not 0 <= o < table.shape[0]:
        raise ObservationOutOfRangeError(f"observation {o} out of range [0, {table.shape[0]})")
    joint = table[o] * q.dist.weights
    p_obs = joint.sum()
    if p_obs <= 0:
        raise ImpossibleObservationError(
            f"observation {o} has zero probability under the current belief at t={q.timestep}"
        )
    return Belief(Dist(joint / p_obs), q.timestep), float(p_obs)


def filter(d: Dist, actions, observations, m: GenerativeModel) -> Belief:
    """Exact posterior after a full history.

    The history interleaves as: correct on observations[0] from the prior d,
    then for each action a_i, predict(a_i) and correct on observations[i+1].
    Requires len(observations) == len(actions) + 1. Entries record the past,
    so per-action observation models look up the action that preceded each
    observation.
    """
    if len(observations) != len(actions) + 1:
        raise ValueError(
            f"need one more observation than actions, got {len(observations)} obs / {len(actions)} actions"
        )
    belief = correct(Belief(d, 0), observations[0], m.A, None if not m.A.per_action else _first_action_guard(m))
    for i, a in enumerate(actions):
        belief = predict(belief, a, m.B)
        belief = correct(belief, observations[i + 1], m.A, a if m.A.per_action else None)
    return belief


def _first_action_guard(m: GenerativeModel):
    raise ImpossibleObservationError(
        "per-action observation models have no table for an initial observation; "
        "start the history after the first action instead"
    )
