"""Select the kernel backend.

Kernels are compiled with numba when it is importable. Setting
``VECTORQUAD_DISABLE_NUMBA=1`` keeps them as plain numpy functions, which is
slower but useful for debugging and for comparing the two paths.
"""
import os



def _disabled_by_env() -> bool:
    flag = os.environ.get("VECTORQUAD_DISABLE_NUMBA", "").strip().lower()
    return flag in ("1", "true", "yes", "on")


try:
    if _disabled_by_env():
        raise ImportError("numba disabled by environment")
    from numba import njit as _numba_njit

    NUMBA_ENABLED = True
except ImportError:
    _numba_njit = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def deco(fn):
        return fn

    return deco
