"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension (`_ext`, Cython) is preferred when it was built;
otherwise the pure-Python mirror (`_purepy`) is used. Both implement the same
operations with the same floating-point semantics, so results are
bit-identical across backends. Selection can be forced with the environment
variable AMLWB_KERNELS=ext|purepy (set before first import).
"""

import os

from . import _purepy
from .errors import BallViolationError, DegeneratePairError, DivergenceError

_forced = os.environ.get("AMLWB_KERNELS", "").strip().lower()

if _forced == "purepy":
    _impl = _purepy
elif _forced == "ext":
    from . import _ext as _impl
else:
    try:
        from . import _ext as _impl
    except ImportError:
        _impl = _purepy

BACKEND = _impl.BACKEND

pair_distance = _impl.pair_distance
pair_distance_grad = _impl.pair_distance_grad
edge_step = _impl.edge_step
max_sq_norm = _impl.max_sq_norm


def available_backends():
    """Names of the kernel backends importable in this installation."""
    names = ["purepy"]
    try:
        from . import _ext  # noqa: F401
    except ImportError:
        return names
    return ["ext"] + names


def get_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name == "purepy":
        return _purepy
    if name == "ext":
        from . import _ext
        return _ext
    raise ValueError(f"unknown kernel backend: {name!r}")


__all__ = [
    "BACKEND",
    "BallViolationError",
    "DegeneratePairError",
    "DivergenceError",
    "available_backends",
    "edge_step",
    "get_backend",
    "max_sq_norm",
    "pair_distance",
    "pair_distance_grad",
]
