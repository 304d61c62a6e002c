"""Kernel backend selection.

Set DCSBM_MONITOR_BACKEND=numpy to force the pure-numpy kernels, or
=numba to require the compiled ones (import error if numba is missing).
Unset, the compiled backend is used when available.

Both backends draw from the same counter-based streams, so integer edge
weights agree exactly for a given seed; derived float statistics may
differ in the last ulp (libm vs numpy vectorized transcendentals), which
is why results are only promised to be bit-reproducible for a fixed
seed *and* backend.
"""

from __future__ import annotations

import os

_CHOICES = ("numba", "numpy")
_requested = os.environ.get("DCSBM_MONITOR_BACKEND", "").strip().lower()

if _requested and _requested not in _CHOICES:
    raise ImportError(
        f"DCSBM_MONITOR_BACKEND={_requested!r} not recognized; use one of {_CHOICES}")

if _requested == "numpy":
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"
elif _requested == "numba":
    from . import _kernels_numba as kernels
    BACKEND = "numba"
else:
    try:
        from . import _kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels
        BACKEND = "numpy"


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
