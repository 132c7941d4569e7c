"""Hot kernels with a compiled implementation and a pure-Python fallback.

The compiled module is used when it imports; setting ``POLYLAB_PURE_PYTHON=1``
forces the fallback.  Both expose the same functions:

``sweep_marginal(V, kind, q, s, sign, step0, step_tol, value_tol, max_iters)``
    pair-rotation local search over decompositions (in place on ``V``).
``marginal_row_values(V, kind, q, s)``
    per-row weighted payoffs.
``h_grid_max(q, s, n)``
    grid maximum of ``h`` over the quarter disc.
"""

import os

from . import _fallback as fallback
from ._fallback import (
    KIND_CONCURRENCE,
    KIND_RENYI,
    KIND_TSALLIS,
    KIND_UNIFIED,
    KIND_VON_NEUMANN,
)

native = None
if os.environ.get("POLYLAB_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _native as native
    except ImportError:  # extension not built
        native = None

kernels = native if native is not None else fallback
BACKEND = "cython" if native is not None else "python"


def get_kernels(name: str | None = None):
    """Return the kernel module for ``"cython"``, ``"python"``, or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return fallback
    if name == "cython":
        if native is None:
            raise ImportError("compiled kernels are not available")
        return native
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "BACKEND",
    "KIND_CONCURRENCE",
    "KIND_RENYI",
    "KIND_TSALLIS",
    "KIND_UNIFIED",
    "KIND_VON_NEUMANN",
    "fallback",
    "get_kernels",
    "kernels",
    "native",
]
