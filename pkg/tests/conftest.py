import pytest

from aifloop.genmodel import GenerativeModel, ObservationModel, PreferenceSchedule, TransitionModel
from aifloop.probmath import Dist


def random_model(rng, num_states, num_actions, num_obs, mode="observations", per_action_a=False):
    """Dense random generative model; every column strictly positive."""
    shape = (num_actions, num_obs, num_states) if per_action_a else (num_obs, num_states)
    a = rng.random(shape) + 0.05
    a /= a.sum(axis=-2, keepdims=True)
    b = rng.random((num_actions, num_states, num_states)) + 0.05
    b /= b.sum(axis=1, keepdims=True)
    dim = num_obs if mode == "observations" else num_states
    c = rng.random(dim) + 0.05
    d = rng.random(num_states) + 0.05
    return GenerativeModel(
        num_states=num_states,
        num_actions=num_actions,
        num_obs=num_obs,
        A=ObservationModel(a, per_action=per_action_a),
        B=TransitionModel(b),
        C=PreferenceSchedule(mode, (Dist(c / c.sum()),)),
        D=Dist(d / d.sum()),
    )


def sample_history(rng, model, num_actions_taken):
    """Ancestral draw of (actions, observations) from the model itself."""
    s = int(rng.choice(model.num_states, p=model.D.weights))
    observations = [int(rng.choice(model.num_obs, p=model.A.table[:, s]))]
    actions = []
    for _ in range(num_actions_taken):
        a = int(rng.integers(model.num_actions))
        actions.append(a)
        s = int(rng.choice(model.num_states, p=model.B.stack[a][:, s]))
        observations.append(int(rng.choice(model.num_obs, p=model.A.table[:, s])))
    return actions, observations


@pytest.fixture(params=["compiled", "numpy"])
def backend(request):
    from aifloop import _kernels

    if request.param not in _kernels.BACKENDS:
        pytest.skip(f"{request.param} backend not built")
    return request.param
