"""aifloop: exact discrete-state active inference for interaction loops.

Filtering (predict/correct), expected-free-energy planning over enumerated
policies, a number-entry transduction environment over a noisy binary
channel, a two-agent goal-relay dyad, Markov blanket detection from sampled
data, a batch CLI, and a live human-in-the-loop session service.
"""
from . import _kernels
from .agent import Agent, AgentConfig, EpisodeTrace, run_episode
from .genmodel import (
    GenerativeModel,
    ObservationModel,
    PreferenceSchedule,
    TransitionModel,
    load_model,
    preference_at,
    save_model,
    validate_generative_model,
)
from .inference import Belief, correct, filter, predict
from .planning import (
    EfeBreakdown,
    Policy,
    PolicySet,
    efe_observation_form,
    efe_state_form,
    efe_state_info_form,
    enumerate_policies,
    expected_information_gain,
    policy_distribution,
    pragmatic_value_obs,
    rollout_beliefs,
    select_action,
)
from .probmath import Dist, entropy, expected_log, kl, make_rng, normalize, sample_index, softmax_neg

__version__ = "0.1.0"

scoring_backend = _kernels.ACTIVE_BACKEND
