"""Policy-tree scoring backends.

The compiled extension (efe_core, Cython) is preferred when it was built;
otherwise the vectorized numpy implementation is used. Both expose the same
`score_policy_tree` contract and agree to ~1e-12; per-installation results
are bitwise reproducible.
"""
from . import efe_numpy

try:
    from . import efe_core as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"numpy": efe_numpy}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

ACTIVE_BACKEND = "compiled" if _compiled is not None else "numpy"


def active():
    return BACKENDS[ACTIVE_BACKEND]


def get(name: str):
    if name not in BACKENDS:
        raise KeyError(f"unknown backend {name!r}; built: {sorted(BACKENDS)}")
    return BACKENDS[name]
