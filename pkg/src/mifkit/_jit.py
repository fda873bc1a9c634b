"""Numba switch.

Set ``MIFKIT_NO_NUMBA=1`` to force the pure-numpy kernels even when numba is
importable. The flag is read once, at import time.
"""

import os

_DISABLED = os.environ.get("MIFKIT_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by MIFKIT_NO_NUMBA")
    import numba as nb

    HAS_NUMBA = True
except ImportError:
    nb = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def set_threads(n):
    if HAS_NUMBA and n:
        nb.set_num_threads(max(1, min(int(n), nb.config.NUMBA_NUM_THREADS)))
