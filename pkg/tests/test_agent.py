import numpy as np
import pytest

from aifloop.agent import Agent, AgentConfig, EpisodeTrace, run_episode
from aifloop.genmodel import GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from aifloop.inference import Belief, correct, filter
from aifloop.planning import GREEDY_PRECISION
from aifloop.probmath import Dist, make_rng
from conftest import random_model, sample_history


class ScriptedEnv:
    """Plays back a fixed observation list, then terminates."""

    def __init__(self, observations):
        self.observations = list(observations)
        self.cursor = 0

    def reset(self):
        self.cursor = 0
        return self.observations[0]

    def step(self, action):
        self.cursor += 1
        if self.cursor >= len(self.observations):
            return None, True
        return self.observations[self.cursor], False


def goal_model():
    """Two fully observed states; action 1 deterministically reaches state 1,
    which holds almost all preference mass. Action 0 scrambles the state, so
    the goal action stays the strict argmin even once the goal is reached."""
    b = np.zeros((2, 2, 2))
    b[0] = np.full((2, 2), 0.5)  # drift
    b[1, 1, :] = 1.0  # go to state 1
    return GenerativeModel(
        2, 2, 2,
        ObservationModel(np.eye(2)),
        TransitionModel(b),
        PreferenceSchedule("states", (Dist([0.05, 0.95]),)),
        Dist([1.0, 0.0]),
    )


def test_reset_restores_prior_and_is_idempotent():
    m = random_model(make_rng(50), 3, 2, 3)
    agent = Agent(m, AgentConfig(seed=4))
    agent.step(1)
    agent.step(0)
    agent.reset()
    assert agent.belief.dist.tolist() == m.D.tolist()
    assert agent.step_count == 0 and len(agent.trace.steps) == 0
    state_once = agent.belief.dist.tolist()
    agent.reset()
    assert agent.belief.dist.tolist() == state_once


def test_reset_with_seed_matches_fresh_agent():
    m = random_model(make_rng(51), 3, 2, 3)
    obs, _ = (lambda pair: pair)(sample_history(make_rng(52), m, 6))
    actions_obs = sample_history(make_rng(52), m, 6)[1]
    a1 = Agent(m, AgentConfig(seed=10, precision=2.0))
    for o in actions_obs:
        a1.step(o)
    a1.reset(seed=77)
    replay1 = [a1.step(o) for o in actions_obs]
    a2 = Agent(m, AgentConfig(seed=77, precision=2.0))
    replay2 = [a2.step(o) for o in actions_obs]
    assert replay1 == replay2


def test_single_action_model_belief_follows_filter():
    rng = make_rng(53)
    m = random_model(rng, 3, 1, 3)
    actions, observations = sample_history(rng, m, 4)
    agent = Agent(m, AgentConfig())
    for o in observations:
        assert agent.step(o) == 0
    want = filter(m.D, [0] * 4, observations, m)
    # the agent predicted once more after the last correction
    from aifloop.inference import predict

    want = predict(want, 0, m.B)
    assert np.max(np.abs(agent.belief.dist.weights - want.dist.weights)) < 1e-12


def test_goal_task_greedy_picks_goal_action_every_step():
    m = goal_model()
    agent = Agent(m, AgentConfig(horizon=1, precision=GREEDY_PRECISION, efe_mode="state"))
    obs = 0
    for _ in range(4):
        action = agent.step(obs)
        assert action == 1
        obs = 1


def test_trace_self_consistency_and_determinism():
    rng = make_rng(54)
    m = random_model(rng, 3, 2, 3)
    _, observations = sample_history(rng, m, 5)

    def run():
        agent = Agent(m, AgentConfig(seed=3, precision=1.5, diagnostic=True))
        for o in observations:
            agent.step(o)
        return agent.trace

    t1, t2 = run(), run()
    assert t1.to_jsonl() == t2.to_jsonl()
    for step in t1.steps:
        prior = Belief(Dist(step.prior), 0)
        post = correct(prior, step.obs, m.A)
        assert np.max(np.abs(np.array(step.posterior) - post.dist.weights)) < 1e-12
    assert np.isfinite(t1.cumulative_surprise())


def test_trace_jsonl_round_trip():
    rng = make_rng(55)
    m = random_model(rng, 2, 2, 2)
    agent = Agent(m, AgentConfig(seed=1, diagnostic=True))
    _, observations = sample_history(rng, m, 3)
    for o in observations:
        agent.step(o)
    text = agent.trace.to_jsonl()
    back = EpisodeTrace.from_jsonl(text)
    assert back.to_jsonl() == text
    assert [s.action for s in back.steps] == [s.action for s in agent.trace.steps]


def test_trace_ms_zero_unless_requested():
    rng = make_rng(56)
    m = random_model(rng, 2, 1, 2)
    agent = Agent(m, AgentConfig())
    agent.step(0)
    import json

    assert json.loads(agent.trace.to_jsonl().splitlines()[0])["ms"] == 0.0
    assert json.loads(agent.trace.to_jsonl(include_timings=True).splitlines()[0])["ms"] > 0.0


def test_run_episode_immediate_termination():
    m = random_model(make_rng(57), 2, 1, 2)
    agent = Agent(m, AgentConfig())
    trace = run_episode(agent, ScriptedEnv([0]), max_steps=10)
    assert len(trace.steps) == 1
    assert not trace.max_steps_reached


def test_run_episode_scripted_matches_filter():
    rng = make_rng(58)
    m = random_model(rng, 3, 1, 3)
    _, observations = sample_history(rng, m, 3)
    agent = Agent(m, AgentConfig())
    trace = run_episode(agent, ScriptedEnv(observations), max_steps=10)
    assert trace.observations() == observations
    want = filter(m.D, [0] * 3, observations, m)
    assert np.max(np.abs(np.array(trace.steps[-1].posterior) - want.dist.weights)) < 1e-12


def test_run_episode_zero_steps_flagged():
    m = random_model(make_rng(59), 2, 1, 2)
    agent = Agent(m, AgentConfig())
    trace = run_episode(agent, ScriptedEnv([0, 1]), max_steps=0)
    assert len(trace.steps) == 0 and trace.max_steps_reached


def test_flat_model_action_distribution_unbiased():
    # uninformative sensor, flat preferences: no action should be preferred
    n, num_actions = 3, 3
    rng = make_rng(60)
    b = rng.random((num_actions, n, n)) + 0.2
    b /= b.sum(axis=1, keepdims=True)
    m = GenerativeModel(
        n, num_actions, 2,
        ObservationModel(np.full((2, n), 0.5)),
        TransitionModel(b),
        PreferenceSchedule("observations", (Dist([0.5, 0.5]),)),
        Dist(np.full(n, 1 / n)),
    )
    counts = np.zeros(num_actions)
    trials = 3000
    for seed in range(trials):
        agent = Agent(m, AgentConfig(seed=seed, precision=1.0))
        counts[agent.step(0)] += 1
    p = 1 / num_actions
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) <= 3 * sigma)


def test_budget_below_action_count_rejected():
    m = random_model(make_rng(61), 2, 2, 2)
    with pytest.raises(ValueError):
        Agent(m, AgentConfig(policy_budget=1))


def test_impossible_observation_reports_step_context():
    m = GenerativeModel(
        2, 1, 2,
        ObservationModel(np.eye(2)),
        TransitionModel(np.eye(2)[None]),
        PreferenceSchedule("observations", (Dist([0.5, 0.5]),)),
        Dist([1.0, 0.0]),
    )
    from aifloop.inference import ImpossibleObservationError

    agent = Agent(m, AgentConfig())
    agent.step(0)
    with pytest.raises(ImpossibleObservationError, match="agent step 1"):
        agent.step(1)
