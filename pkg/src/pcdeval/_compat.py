"""Optional numba acceleration.

Setting ``PCDEVAL_DISABLE_NUMBA=1`` (or any of ``true``/``yes``/``on``) forces
the pure-numpy kernels even when numba is importable.
"""

import os

_FLAG = "PCDEVAL_DISABLE_NUMBA"


def _env_disabled():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba
    _NUMBA_IMPORTABLE = True
except ImportError:
    numba = None
    _NUMBA_IMPORTABLE = False

_HAS_NUMBA = _NUMBA_IMPORTABLE and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator."""
    if _NUMBA_IMPORTABLE:
        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
