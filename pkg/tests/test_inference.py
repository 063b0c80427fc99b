import numpy as np
import pytest

from aifloop.genmodel import GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from aifloop.inference import (
    ActionOutOfRangeError,
    Belief,
    ImpossibleObservationError,
    correct,
    correct_with_evidence,
    filter,
    predict,
)
from aifloop.probmath import Dist, make_rng
from conftest import random_model, sample_history
from oracles import joint_posterior


def test_predict_examples():
    b = TransitionModel([[[0.9, 0.3], [0.1, 0.7]]])
    out = predict(Belief(Dist([1, 0]), 0), 0, b)
    assert out.dist.tolist() == pytest.approx([0.9, 0.1], abs=1e-12)
    assert out.timestep == 1

    uniform_b = TransitionModel(np.full((1, 3, 3), 1 / 3))
    out = predict(Belief(Dist([0.2, 0.5, 0.3]), 4), 0, uniform_b)
    assert out.dist.tolist() == pytest.approx([1 / 3] * 3, abs=1e-12)

    identity_b = TransitionModel(np.eye(2)[None])
    out = predict(Belief(Dist([0.5, 0.5]), 0), 0, identity_b)
    assert out.dist.tolist() == [0.5, 0.5]


def test_predict_preserves_mass_on_random_models():
    rng = make_rng(20)
    for _ in range(300):
        m = random_model(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)), 2)
        q = Belief(Dist(rng.dirichlet(np.ones(m.num_states))), 0)
        out = predict(q, int(rng.integers(m.num_actions)), m.B)
        assert abs(sum(out.dist.weights) - 1) <= 1e-9


def test_predict_action_out_of_range():
    b = TransitionModel(np.eye(2)[None])
    with pytest.raises(ActionOutOfRangeError):
        predict(Belief(Dist([1, 0]), 0), 1, b)


def test_correct_examples():
    identity_a = ObservationModel(np.eye(3))
    out = correct(Belief(Dist([0.2, 0.5, 0.3]), 2), 1, identity_a)
    assert out.dist.tolist() == [0.0, 1.0, 0.0]
    assert out.timestep == 2

    flat_a = ObservationModel(np.full((2, 3), 0.5))
    q = Belief(Dist([0.2, 0.5, 0.3]), 0)
    out = correct(q, 0, flat_a)
    assert np.max(np.abs(out.dist.weights - q.dist.weights)) < 1e-12

    a = ObservationModel([[0.8, 0.2], [0.2, 0.8]])
    out, evidence = correct_with_evidence(Belief(Dist([0.5, 0.5]), 0), 0, a)
    assert out.dist.tolist() == pytest.approx([0.8, 0.2], abs=1e-12)
    assert evidence == pytest.approx(0.5, abs=1e-12)


def test_correct_impossible_observation():
    a = ObservationModel([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ImpossibleObservationError):
        correct(Belief(Dist([1.0, 0.0]), 0), 0, a)


def test_filter_base_case_is_first_correction():
    m = random_model(make_rng(21), 3, 2, 3)
    got = filter(m.D, [], [1], m)
    assert got.dist.tolist() == pytest.approx(correct(Belief(m.D, 0), 1, m.A).dist.tolist(), abs=1e-15)
    assert got.timestep == 0


def test_filter_requires_one_more_observation():
    m = random_model(make_rng(22), 2, 2, 2)
    with pytest.raises(ValueError):
        filter(m.D, [0, 1], [0, 1], m)


def test_filter_equals_stepwise_composition():
    rng = make_rng(23)
    for _ in range(50):
        m = random_model(rng, 3, 2, 2)
        actions, observations = sample_history(rng, m, 4)
        via_filter = filter(m.D, actions, observations, m)
        belief = correct(Belief(m.D, 0), observations[0], m.A)
        for i, a in enumerate(actions):
            belief = correct(predict(belief, a, m.B), observations[i + 1], m.A)
        assert np.max(np.abs(via_filter.dist.weights - belief.dist.weights)) < 1e-12
        assert via_filter.timestep == len(actions)


def test_filter_matches_joint_enumeration_3step():
    rng = make_rng(24)
    m = random_model(rng, 3, 2, 2)
    actions, observations = sample_history(rng, m, 3)
    got = filter(m.D, actions, observations, m)
    want = joint_posterior(m, actions, observations)
    assert np.max(np.abs(got.dist.weights - np.array(want))) < 1e-9


def test_fully_observed_chain_tracks_last_observation():
    n = 4
    m = GenerativeModel(
        num_states=n,
        num_actions=1,
        num_obs=n,
        A=ObservationModel(np.eye(n)),
        B=TransitionModel(np.eye(n)[None]),
        C=PreferenceSchedule("observations", (Dist(np.full(n, 1 / n)),)),
        D=Dist(np.full(n, 1 / n)),
    )
    got = filter(m.D, [0, 0], [2, 2, 2], m)
    assert got.dist.tolist() == [0.0, 0.0, 1.0, 0.0]
