"""Optional numba acceleration.

Set ``HYBRIDSQUEEZE_NUMBA=0`` before import to force the pure-numpy path.
"""

import os


def _noop_jit(f=None, **kwargs):
    if f is None:
        return lambda g: g
    return f


def _flag_enabled():
    return os.environ.get("HYBRIDSQUEEZE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _flag_enabled()


def njit(f=None, **kwargs):
    """``numba.njit`` when enabled, otherwise identity."""
    if not HAVE_NUMBA:
        return _noop_jit(f, **kwargs)
    kwargs.setdefault("cache", True)
    if f is None:
        return numba.njit(**kwargs)
    return numba.njit(**kwargs)(f)
