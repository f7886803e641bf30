"""Kernel backend selection.

Hot loops are compiled with numba unless ``L1GALERKIN_BACKEND=numpy`` is set
in the environment (or numba cannot be imported), in which case the
pure-numpy kernels are used.  The choice is made once, at import time.
"""

import os

BACKEND_ENV = "L1GALERKIN_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def _select() -> str:
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAS_NUMBA:
        return "numpy"
    return requested


BACKEND = _select()
