"""Optional numba acceleration.

Set ``ADJVT_PURE_NUMPY=1`` in the environment before import to force the
pure-numpy kernels (also used automatically when numba is unavailable).
"""
import os

_DISABLED = os.environ.get("ADJVT_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a transparent no-op."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
