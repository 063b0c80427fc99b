"""The closed loop: observe → correct → plan → act → predict, with traces.

An episode starts from the prior D. The first observation (when the
environment provides one) corrects D in place at t=0; each step thereafter
corrects on the newest observation, selects an action with the freshest
belief, then predicts through the chosen action. Environments that emit no
initial stimulus pass observation=None and the first correction is skipped.

Wall-clock per-step durations are measured and kept on the trace, but are
serialized as 0 unless explicitly requested: batch artifacts must be a pure
function of (config, seeds).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .genmodel import GenerativeModel, validate_generative_model
from .inference import Belief, ImpossibleObservationError, correct_with_evidence, predict
from .planning import EFE_OBSERVATION, EFE_STATE, EFE_STATE_INFO, EfeBreakdown, default_efe_mode, select_action
from .probmath import make_rng


@dataclass(frozen=True)
class AgentConfig:
    horizon: int = 1
    precision: float = 1.0
    policy_budget: int = 100_000
    efe_mode: str | None = None
    seed: int = 0
    diagnostic: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be ≥ 1, got {self.horizon}")
        if self.efe_mode not in (None, EFE_OBSERVATION, EFE_STATE, EFE_STATE_INFO):
            raise ValueError(f"unknown efe_mode {self.efe_mode!r}")


@dataclass
class StepRecord:
    t: int
    prior: list[float]
    action: int
    obs: int | None
    posterior: list[float]
    efe_chosen: float
    info_gain: list[float]
    pragmatic: list[float]
    risk: list[float]
    ambiguity: list[float]
    surprise: float | None
    ms: float
    efe_table: list[float] | None = None


@dataclass
class EpisodeTrace:
    steps: list[StepRecord] = field(default_factory=list)
    max_steps_reached: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    def actions(self) -> list[int]:
        return [s.action for s in self.steps]

    def observations(self) -> list[int | None]:
        return [s.obs for s in self.steps]

    def cumulative_surprise(self) -> float:
        """−Σ ln P(o_t) over steps that carried an observation."""
        return float(sum(s.surprise for s in self.steps if s.surprise is not None))

    def to_jsonl(self, include_timings: bool = False) -> str:
        lines = []
        for s in self.steps:
            doc = {
                "t": s.t,
                "prior": s.prior,
                "action": s.action,
                "obs": s.obs,
                "posterior": s.posterior,
                "efe_chosen": s.efe_chosen,
                "info_gain": s.info_gain,
                "pragmatic": s.pragmatic,
                "risk": s.risk,
                "ambiguity": s.ambiguity,
                "surprise": s.surprise,
                "ms": s.ms if include_timings else 0.0,
            }
            if s.efe_table is not None:
                doc["efe_table"] = s.efe_table
            lines.append(json.dumps(doc))
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def from_jsonl(text: str) -> "EpisodeTrace":
        steps = []
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            steps.append(
                StepRecord(
                    t=doc["t"],
                    prior=doc["prior"],
                    action=doc["action"],
                    obs=doc["obs"],
                    posterior=doc["posterior"],
                    efe_chosen=doc["efe_chosen"],
                    info_gain=doc["info_gain"],
                    pragmatic=doc["pragmatic"],
                    risk=doc["risk"],
                    ambiguity=doc["ambiguity"],
                    surprise=doc["surprise"],
                    ms=doc["ms"],
                    efe_table=doc.get("efe_table"),
                )
            )
        return EpisodeTrace(steps=steps)


def _breakdown_lists(b: EfeBreakdown) -> tuple[list, list, list, list]:
    return list(b.info_gain), list(b.pragmatic_value), list(b.risk), list(b.ambiguity)


class Agent:
    """One active-inference agent bound to a generative model."""

    def __init__(self, model: GenerativeModel, cfg: AgentConfig):
        violations = validate_generative_model(model)
        if violations:
            raise ValueError("invalid model: " + "; ".join(violations))
        if cfg.policy_budget < model.num_actions:
            raise ValueError(
                f"policy budget {cfg.policy_budget} below the action count {model.num_actions}"
            )
        self.model = model
        self.cfg = cfg
        self.rng = make_rng(cfg.seed)
        self.belief = Belief(model.D, 0)
        self.step_count = 0
        self.last_action: int | None = None
        self.trace = EpisodeTrace()

    @property
    def efe_mode(self) -> str:
        return self.cfg.efe_mode or default_efe_mode(self.model)

    def reset(self, seed: int | None = None) -> None:
        """Back to the prior D and an empty trace. The generator keeps its
        state unless a new seed is given."""
        if seed is not None:
            self.rng = make_rng(seed)
        self.belief = Belief(self.model.D, 0)
        self.step_count = 0
        self.last_action = None
        self.trace = EpisodeTrace()

    def step(self, observation: int | None) -> int:
        """Absorb one observation (None = no stimulus), act, predict."""
        t_start = time.perf_counter()
        prior = self.belief
        surprise = None
        if observation is not None:
            try:
                self.belief, p_obs = correct_with_evidence(
                    self.belief,
                    observation,
                    self.model.A,
                    self.last_action if self.model.A.per_action else None,
                )
            except ImpossibleObservationError as exc:
                raise ImpossibleObservationError(
                    f"agent step {self.step_count} (after {len(self.trace.steps)} traced steps, "
                    f"last action {self.last_action}): {exc}"
                ) from exc
            surprise = float(-np.log(p_obs))
        posterior = self.belief
        action, pset = select_action(self.belief, self.model, self._plan_cfg(), self.rng)
        self.belief = predict(self.belief, action, self.model.B)
        ig, pv, risk, amb = _breakdown_lists(pset.chosen)
        self.trace.steps.append(
            StepRecord(
                t=self.step_count,
                prior=prior.dist.tolist(),
                action=action,
                obs=observation,
                posterior=posterior.dist.tolist(),
                efe_chosen=float(pset.efes[pset.chosen_index]),
                info_gain=ig,
                pragmatic=pv,
                risk=risk,
                ambiguity=amb,
                surprise=surprise,
                ms=(time.perf_counter() - t_start) * 1000.0,
                efe_table=list(pset.efes) if self.cfg.diagnostic else None,
            )
        )
        self.step_count += 1
        self.last_action = action
        return action

    def _plan_cfg(self):
        if self.cfg.efe_mode is not None:
            return self.cfg
        return AgentConfig(
            horizon=self.cfg.horizon,
            precision=self.cfg.precision,
            policy_budget=self.cfg.policy_budget,
            efe_mode=self.efe_mode,
            seed=self.cfg.seed,
            diagnostic=self.cfg.diagnostic,
        )


def reset(agent: Agent, seed: int | None = None) -> None:
    agent.reset(seed)


def run_episode(agent: Agent, env, max_steps: int) -> EpisodeTrace:
    """Alternate agent.step / env.step until the environment terminates.

    The environment contract: reset() returns the first observation (or
    None), step(action) returns (observation-or-None, done). Hitting
    max_steps is a normal outcome, flagged on the trace.
    """
    agent.reset()
    obs = env.reset()
    done = False
    for _ in range(max_steps):
        action = agent.step(obs)
        obs, done = env.step(action)
        if done:
            break
    if not done:
        agent.trace.max_steps_reached = True
    return agent.trace
