"""Exact categorical-probability primitives shared by every other module.

All quantities are in nats. Probabilities are floored at ``PROB_FLOOR``
(and renormalized) before any logarithm so that zero-mass preferences
produce large-but-finite penalties instead of infinities.

Randomness: every stochastic operation takes an explicit
:class:`numpy.random.Generator`. Use :func:`make_rng` to build one from a
64-bit seed (PCG64 stream, reproducible across runs and platforms).
"""
from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12
SUM_TOL = 1e-9


class ProbabilityError(ValueError):
    """Base class for invalid probability inputs."""


class AllZeroError(ProbabilityError):
    """Every weight is zero; usually means an impossible observation."""


class NegativeWeightError(ProbabilityError):
    pass


class LengthMismatchError(ProbabilityError):
    pass


class NonFiniteScoreError(ProbabilityError):
    pass


class Dist:
    """A categorical distribution: fixed-length, non-negative, sums to 1.

    The weight vector is stored as a read-only float64 array; the length is
    fixed for the life of the value.
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ProbabilityError(f"expected a non-empty 1-D weight vector, got shape {w.shape}")
        if np.any(w < 0):
            raise NegativeWeightError(f"negative weight at index {int(np.argmin(w))}")
        s = w.sum()
        if not np.isfinite(s) or abs(s - 1.0) > SUM_TOL:
            raise ProbabilityError(f"weights sum to {s!r}, expected 1 within {SUM_TOL}")
        w = w.copy()
        w.flags.writeable = False
        self._w = w

    @property
    def weights(self) -> np.ndarray:
        return self._w

    def __len__(self) -> int:
        return self._w.size

    def __getitem__(self, i) -> float:
        return float(self._w[i])

    def __iter__(self):
        return iter(self._w)

    def __repr__(self) -> str:
        return f"Dist({self._w.tolist()!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Dist) and np.array_equal(self._w, other._w)

    def tolist(self) -> list[float]:
        return self._w.tolist()


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator (PCG64) from a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def normalize(raw) -> Dist:
    """Scale non-negative weights to sum to 1.

    Raises AllZeroError when nothing has mass (an impossible observation,
    not a numerical hiccup) and NegativeWeightError on any negative entry.
    """
    w = np.asarray(raw, dtype=np.float64)
    if np.any(w < 0):
        raise NegativeWeightError(f"negative weight at index {int(np.argmin(w))}")
    s = w.sum()
    if s <= 0:
        raise AllZeroError("all weights are zero")
    return Dist(w / s)


def floored(p) -> np.ndarray:
    """Weights floored at PROB_FLOOR and renormalized; safe to take logs of."""
    w = np.maximum(np.asarray(p, dtype=np.float64), PROB_FLOOR)
    return w / w.sum()


def _weights(p) -> np.ndarray:
    return p.weights if isinstance(p, Dist) else np.asarray(p, dtype=np.float64)


def entropy(p) -> float:
    """Shannon entropy −Σ p ln p in nats, with 0·ln 0 := 0."""
    w = _weights(p)
    nz = w > 0
    return float(-np.sum(w[nz] * np.log(w[nz])))


def kl(p, q) -> float:
    """Σ p ln(p/q) in nats; q is floored before the log. Non-negative."""
    pw, qw = _weights(p), _weights(q)
    if pw.shape != qw.shape:
        raise LengthMismatchError(f"length {pw.size} vs {qw.size}")
    qf = floored(qw)
    nz = pw > 0
    return float(np.sum(pw[nz] * (np.log(pw[nz]) - np.log(qf[nz]))))


def expected_log(p, target) -> float:
    """Σ p ln(target) in nats, the negative cross-entropy. Always ≤ 0."""
    pw, tw = _weights(p), _weights(target)
    if pw.shape != tw.shape:
        raise LengthMismatchError(f"length {pw.size} vs {tw.size}")
    return float(np.sum(pw * np.log(floored(tw))))


def softmax_neg(scores, precision: float = 1.0) -> Dist:
    """Distribution ∝ exp(−precision · score); lowest score gets most mass.

    Stabilized by subtracting the minimum score, so adding a constant to all
    scores changes nothing and huge score gaps cannot overflow.
    """
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFiniteScoreError("scores must be finite")
    if precision <= 0:
        raise ProbabilityError(f"precision must be > 0, got {precision}")
    e = np.exp(-precision * (s - s.min()))
    return Dist(e / e.sum())


def sample_index(p: Dist, rng: np.random.Generator) -> int:
    """Draw one category index from p, advancing the supplied generator.

    Inverse-CDF over the cumulative weights: one uniform draw per sample,
    so the consumed stream is independent of the category count.
    """
    u = rng.random()
    c = np.cumsum(p.weights)
    return int(np.searchsorted(c, u, side="right").clip(0, len(p) - 1))
