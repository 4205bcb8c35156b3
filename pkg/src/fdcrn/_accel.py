"""Optional numba acceleration.

Hot kernels are compiled with numba when it is importable, unless the
environment variable FDCRN_NUMBA is set to 0/false/off, in which case the
pure-numpy fallback path is used everywhere.  The flag is read once at
import time.
"""

import os

__all__ = ["NUMBA_ENABLED", "maybe_njit"]


def _env_wants_numba() -> bool:
    val = os.environ.get("FDCRN_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "off", "no")


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and _env_wants_numba()


def maybe_njit(*args, **kwargs):
    """numba.njit when acceleration is on, identity decorator otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap
