"""
JIT shim.

Hot kernels are written for numba's nopython mode. Setting the environment
variable ``MEANCYCLE_NO_NUMBA=1`` before import (or running without numba
installed) turns ``njit`` into a passthrough decorator; the public API then
routes to vectorised numpy implementations where one exists and to the
plain-Python kernels otherwise.
"""
import os
import warnings

_flag = os.environ.get("MEANCYCLE_NO_NUMBA", "").strip().lower()
USE_NUMBA = _flag not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        warnings.warn("numba is not installed - falling back to numpy kernels")
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kw):
        if len(args) == 1 and callable(args[0]) and not kw:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if USE_NUMBA else "numpy"
