"""Markov blanket discovery from sampled discrete data.

Grow–Shrink with permutation-calibrated conditional-mutual-information
tests: grow by repeatedly adding the variable most dependent on the target
given the current set, shrink by dropping anything that became redundant.
Under faithfulness the result is the target's Markov blanket: the
variables mediating all of its statistical interactions.

Permutation nulls are sampled exactly: permuting one column within strata
of the conditioning set induces contingency tables with fixed margins,
distributed as sequential multivariate hypergeometric draws, so tables
are sampled directly instead of shuffling rows, with an identical null
distribution and deterministic results given a seed.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .probmath import make_rng


class UnknownVariableError(KeyError):
    pass


class SampleTableError(ValueError):
    pass


class SampleTable:
    """Named discrete columns of joint samples; arity inferred per column."""

    def __init__(self, names, data, arities=None):
        self.names = list(names)
        d = np.asarray(data, dtype=np.int64)
        if d.ndim != 2 or d.shape[0] < 1:
            raise SampleTableError(f"need a non-empty 2-D sample array, got shape {d.shape}")
        if d.shape[1] != len(self.names):
            raise SampleTableError(f"{len(self.names)} names for {d.shape[1]} columns")
        if np.any(d < 0):
            raise SampleTableError("negative category codes")
        self.data = d
        inferred = d.max(axis=0) + 1
        if arities is None:
            self.arities = [int(a) for a in inferred]
        else:
            self.arities = [int(a) for a in arities]
            if any(i > a for i, a in zip(inferred, self.arities)):
                raise SampleTableError("cell value at or above declared arity")

    @property
    def num_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariableError(f"no column named {name!r}; have {self.names}") from None

    @staticmethod
    def from_csv(path) -> "SampleTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[int(v) for v in row] for row in reader if row]
        return SampleTable(header, np.asarray(rows, dtype=np.int64))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            writer.writerows(self.data.tolist())


def _joint_counts(t: SampleTable, x: str, y: str, z: tuple[str, ...]) -> np.ndarray:
    """Counts with shape (strata, arity_x, arity_y); strata enumerate the
    conditioning-set value combinations."""
    ix, iy = t.index(x), t.index(y)
    ax, ay = t.arities[ix], t.arities[iy]
    if z:
        iz = [t.index(v) for v in z]
        az = [t.arities[i] for i in iz]
        z_code = np.zeros(t.num_rows, dtype=np.int64)
        for i, a in zip(iz, az):
            z_code = z_code * a + t.data[:, i]
        n_strata = int(np.prod(az))
    else:
        z_code = np.zeros(t.num_rows, dtype=np.int64)
        n_strata = 1
    code = (z_code * ax + t.data[:, ix]) * ay + t.data[:, iy]
    counts = np.bincount(code, minlength=n_strata * ax * ay)
    return counts.reshape(n_strata, ax, ay).astype(np.float64)


def _cmi_from_counts(counts: np.ndarray) -> float:
    """Plug-in conditional mutual information (nats) from stratified counts."""
    n = counts.sum()
    nz_strata = counts.sum(axis=(1, 2))
    nx = counts.sum(axis=2)
    ny = counts.sum(axis=1)
    total = 0.0
    for s in range(counts.shape[0]):
        if nz_strata[s] == 0:
            continue
        c = counts[s]
        mask = c > 0
        if not mask.any():
            continue
        outer = np.outer(nx[s], ny[s])
        total += float(
            np.sum(c[mask] * (np.log(c[mask] * nz_strata[s]) - np.log(outer[mask])))
        )
    return total / n


def empirical_cmi(t: SampleTable, x: str, y: str, z=()) -> float:
    """Plug-in estimate of I(x; y | z) in nats; non-negative by construction."""
    z = tuple(z)
    if x == y or x in z or y in z:
        raise SampleTableError(f"x, y and z must be distinct, got x={x!r} y={y!r} z={z!r}")
    return _cmi_from_counts(_joint_counts(t, x, y, z))


def _sample_null_tables(counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from the within-stratum permutation null: margins preserved,
    cells multivariate hypergeometric."""
    out = np.zeros_like(counts)
    for s in range(counts.shape[0]):
        nx = counts[s].sum(axis=1).astype(np.int64)
        pool = counts[s].sum(axis=0).astype(np.int64)
        remaining = pool.copy()
        for xv in range(nx.size - 1):
            if nx[xv] == 0:
                continue
            draw = rng.multivariate_hypergeometric(remaining, int(nx[xv]))
            out[s, xv] = draw
            remaining = remaining - draw
        out[s, nx.size - 1] = remaining
    return out


def permutation_threshold(
    t: SampleTable, x: str, y: str, z=(), num_permutations: int = 200, alpha: float = 0.05,
    rng: np.random.Generator | None = None,
) -> float:
    """(1−alpha) quantile of CMI under the within-stratum permutation null."""
    if num_permutations < 100:
        raise ValueError(f"need ≥ 100 permutations, got {num_permutations}")
    if rng is None:
        rng = make_rng(0)
    counts = _joint_counts(t, x, y, tuple(z))
    samples = np.empty(num_permutations)
    for i in range(num_permutations):
        samples[i] = _cmi_from_counts(_sample_null_tables(counts, rng))
    return float(np.quantile(samples, 1.0 - alpha, method="higher"))


@dataclass
class CmiStat:
    var: str
    cmi: float
    threshold: float
    conditioning: tuple[str, ...]
    phase: str


@dataclass
class BlanketResult:
    target: str
    blanket: list[str]
    stats: list[CmiStat] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "blanket": list(self.blanket),
            "stats": [
                {
                    "var": s.var,
                    "cmi": s.cmi,
                    "threshold": s.threshold,
                    "conditioning": list(s.conditioning),
                    "phase": s.phase,
                }
                for s in self.stats
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def grow_shrink(
    t: SampleTable,
    target: str,
    alpha: float = 0.05,
    rng: np.random.Generator | None = None,
    num_permutations: int = 200,
) -> BlanketResult:
    """Two-phase blanket discovery around `target`.

    Candidates are evaluated in column order with ties to the lowest index;
    the generator is consumed in that same order, so results are a pure
    function of (table, seed).
    """
    t.index(target)
    if rng is None:
        rng = make_rng(0)
    blanket: list[str] = []
    stats: list[CmiStat] = []

    while True:
        best_var, best_cmi = None, 0.0
        for v in t.names:
            if v == target or v in blanket:
                continue
            cond = tuple(blanket)
            cmi = empirical_cmi(t, target, v, cond)
            thr = permutation_threshold(t, target, v, cond, num_permutations, alpha, rng)
            stats.append(CmiStat(v, cmi, thr, cond, "grow"))
            if cmi > thr and cmi > best_cmi:
                best_var, best_cmi = v, cmi
        if best_var is None:
            break
        blanket.append(best_var)

    for v in list(blanket):
        cond = tuple(w for w in blanket if w != v)
        cmi = empirical_cmi(t, target, v, cond)
        thr = permutation_threshold(t, target, v, cond, num_permutations, alpha, rng)
        stats.append(CmiStat(v, cmi, thr, cond, "shrink"))
        if cmi <= thr:
            blanket.remove(v)

    blanket_sorted = sorted(blanket, key=t.index)
    return BlanketResult(target=target, blanket=blanket_sorted, stats=stats)
