"""Backend switch for the hot loops.

Kernels exist twice: a vectorised numpy version and an explicit-loop version
compiled with numba. ``SELD3D_NUMBA=0`` (or a missing numba install) selects
the numpy path. ``SELD3D_THREADS`` caps numba's thread pool.
"""

import os

_FLAG = os.environ.get("SELD3D_NUMBA", "1").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")

if HAVE_NUMBA:
    _threads = os.environ.get("SELD3D_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

    def njit(fn=None, *, fastmath=False):
        if fn is None:
            return lambda f: numba.njit(cache=True, nogil=True, fastmath=fastmath)(f)
        return numba.njit(cache=True, nogil=True)(fn)

else:  # pragma: no cover

    def njit(fn=None, **kwargs):
        if fn is None:
            return lambda f: f
        return fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
