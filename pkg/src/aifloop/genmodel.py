"""Containers and validation for a discrete generative model (A, B, C, D).

Matrix layout convention, used everywhere: entry[row = outcome][col =
condition]. So A[o, s] = P(o|s) and B[a][s2, s1] = P(s2 | s1, a); columns
are distributions.

Preference schedules may be indexed by absolute episode timestep; an index
past the end holds the last entry. Whether time-varying preferences should
be absolute or plan-relative is underdetermined; absolute indexing is fixed
here, and the planner maps plan step j at belief time t0 to absolute time
t0 + j + 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .probmath import SUM_TOL, Dist


class ModelError(ValueError):
    pass


class ObservationModel:
    """P(o|s), either one table shared by all actions or one table per action.

    table: (num_obs, num_states); per-action: (num_actions, num_obs, num_states).
    """

    def __init__(self, table, per_action: bool = False):
        t = np.asarray(table, dtype=np.float64)
        expect = 3 if per_action else 2
        if t.ndim != expect:
            raise ModelError(f"observation table must be {expect}-D, got shape {t.shape}")
        t = t.copy()
        t.flags.writeable = False
        self.table = t
        self.per_action = per_action

    @property
    def num_obs(self) -> int:
        return self.table.shape[-2]

    @property
    def num_states(self) -> int:
        return self.table.shape[-1]

    def for_action(self, action: int | None = None) -> np.ndarray:
        """The (num_obs, num_states) table in effect after taking `action`."""
        if not self.per_action:
            return self.table
        if action is None:
            raise ModelError("this observation model is per-action; an action is required")
        return self.table[action]


class TransitionModel:
    """P(s2 | s1, a): a (num_actions, S, S) stack of column-stochastic matrices."""

    def __init__(self, stack):
        b = np.asarray(stack, dtype=np.float64)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ModelError(f"transition stack must be (A, S, S), got shape {b.shape}")
        b = b.copy()
        b.flags.writeable = False
        self.stack = b

    @property
    def num_actions(self) -> int:
        return self.stack.shape[0]

    @property
    def num_states(self) -> int:
        return self.stack.shape[1]

    def matrix(self, action: int) -> np.ndarray:
        if not 0 <= action < self.num_actions:
            raise ModelError(f"action {action} out of range [0, {self.num_actions})")
        return self.stack[action]


OBSERVATION_MODE = "observations"
STATE_MODE = "states"


@dataclass(frozen=True)
class PreferenceSchedule:
    """Preferred-outcome prior, over observations or over states.

    A single entry is stationary; multiple entries are indexed by absolute
    timestep with the last entry held beyond the end.
    """

    mode: str
    entries: tuple[Dist, ...]

    def __post_init__(self):
        if self.mode not in (OBSERVATION_MODE, STATE_MODE):
            raise ModelError(f"mode must be {OBSERVATION_MODE!r} or {STATE_MODE!r}, got {self.mode!r}")
        if not self.entries:
            raise ModelError("preference schedule needs at least one entry")
        n = len(self.entries[0])
        if any(len(e) != n for e in self.entries):
            raise ModelError("all schedule entries must have the same length")
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def dim(self) -> int:
        return len(self.entries[0])

    def at(self, t: int) -> Dist:
        if t < 0:
            raise ModelError(f"timestep must be ≥ 0, got {t}")
        return self.entries[min(t, len(self.entries) - 1)]


def preference_at(c: PreferenceSchedule, t: int) -> Dist:
    """Preference distribution in force at absolute timestep t (hold-last)."""
    return c.at(t)


@dataclass(frozen=True)
class GenerativeModel:
    """The agent's model of its world: spaces plus A, B, C, D.

    A: observation model, B: per-action transitions, C: preference schedule,
    D: initial belief over states. `validate_generative_model` reports any
    dimension or column-stochasticity violations.
    """

    num_states: int
    num_actions: int
    num_obs: int
    A: ObservationModel
    B: TransitionModel
    C: PreferenceSchedule
    D: Dist
    labels: dict = field(default_factory=dict, compare=False)

    def validate(self) -> list[str]:
        return validate_generative_model(self)


def _check_columns(mat: np.ndarray, what: str, out: list[str]) -> None:
    for col in range(mat.shape[1]):
        column = mat[:, col]
        if np.any(column < 0):
            out.append(f"{what} column {col} has a negative entry")
        s = column.sum()
        if abs(s - 1.0) > SUM_TOL:
            out.append(f"{what} column {col} sums to {s:.12g}")


def validate_generative_model(m: GenerativeModel) -> list[str]:
    """Every violation found, with indices; an empty list means valid."""
    out: list[str] = []
    S, A_n, O = m.num_states, m.num_actions, m.num_obs
    if min(S, A_n, O) < 1:
        out.append(f"dimensions must be positive, got S={S} A={A_n} O={O}")
        return out

    tables = m.A.table if m.A.per_action else m.A.table[None, :, :]
    if m.A.per_action and tables.shape[0] != A_n:
        out.append(f"A has {tables.shape[0]} per-action tables, expected {A_n}")
    if tables.shape[-2:] != (O, S):
        out.append(f"A table shape {tables.shape[-2:]} != ({O}, {S})")
    else:
        for a in range(tables.shape[0]):
            tag = f"A[a={a}]" if m.A.per_action else "A"
            _check_columns(tables[a], tag, out)

    if m.B.stack.shape != (A_n, S, S):
        out.append(f"B stack shape {m.B.stack.shape} != ({A_n}, {S}, {S})")
    else:
        for a in range(A_n):
            _check_columns(m.B.stack[a], f"B[a={a}]", out)

    want = O if m.C.mode == OBSERVATION_MODE else S
    if m.C.dim != want:
        out.append(f"C entries have length {m.C.dim}, expected {want} for mode {m.C.mode!r}")

    if len(m.D) != S:
        out.append(f"D has length {len(m.D)}, expected {S}")
    return out


def model_to_dict(m: GenerativeModel) -> dict:
    a = m.A.table.tolist()
    return {
        "num_states": m.num_states,
        "num_actions": m.num_actions,
        "num_obs": m.num_obs,
        "A": a,
        "B": [m.B.stack[i].tolist() for i in range(m.num_actions)],
        "C": {"mode": m.C.mode, "entries": [e.tolist() for e in m.C.entries]},
        "D": m.D.tolist(),
    }


def model_from_dict(doc: dict) -> GenerativeModel:
    try:
        a_raw = np.asarray(doc["A"], dtype=np.float64)
        m = GenerativeModel(
            num_states=int(doc["num_states"]),
            num_actions=int(doc["num_actions"]),
            num_obs=int(doc["num_obs"]),
            A=ObservationModel(a_raw, per_action=(a_raw.ndim == 3)),
            B=TransitionModel(np.asarray(doc["B"], dtype=np.float64)),
            C=PreferenceSchedule(doc["C"]["mode"], tuple(Dist(e) for e in doc["C"]["entries"])),
            D=Dist(doc["D"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model document: {exc}") from exc
    violations = validate_generative_model(m)
    if violations:
        raise ModelError("invalid model: " + "; ".join(violations))
    return m


def save_model(m: GenerativeModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(m), fh)


def load_model(path) -> GenerativeModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
