"""Optional numba acceleration.

Set ``IGABEZ_DISABLE_NUMBA=1`` to force the pure-numpy kernels; numba is
also skipped when it is not importable.
"""
import os

_FLAG = os.environ.get("IGABEZ_DISABLE_NUMBA", "0").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is installed, else a no-op.

    Kernels decorated with this are still valid Python; without numba they
    simply run interpreted (slow, but used only for cross-checks).
    """
    kwargs.setdefault("cache", True)
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f
