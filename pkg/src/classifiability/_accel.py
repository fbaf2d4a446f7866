"""Backend switch for the hot kernels.

Set ``CLASSIFIABILITY_DISABLE_NUMBA=1`` to force the pure-numpy path (also
used automatically when numba cannot be imported). ``CLASSIFIABILITY_THREADS``
caps the number of numba worker threads.
"""
import os

_TRUE = {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
if HAVE_NUMBA and "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB layer warns on older system TBB builds; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"
_enabled = HAVE_NUMBA and os.environ.get("CLASSIFIABILITY_DISABLE_NUMBA", "").lower() not in _TRUE


def numba_enabled() -> bool:
    return _enabled


def use_numba(flag: bool) -> bool:
    """Switch backends at runtime; returns the previous setting."""
    global _enabled
    previous = _enabled
    _enabled = bool(flag) and HAVE_NUMBA
    return previous


def njit(*args, **kwargs):
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def set_threads(n=None) -> int:
    """Apply ``n`` (or ``CLASSIFIABILITY_THREADS``) to numba; returns the count in use."""
    if numba is None:
        return 1
    if n is None:
        env = os.environ.get("CLASSIFIABILITY_THREADS")
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def get_threads() -> int:
    return numba.get_num_threads() if numba is not None else 1
