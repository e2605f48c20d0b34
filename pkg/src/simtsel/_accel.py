"""Numba switch.

Set ``SIMTSEL_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. when
debugging or when numba is not installed.
"""

import os

_disabled = os.environ.get("SIMTSEL_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError("disabled by SIMTSEL_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(f):
            return f
        return _wrap


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"
