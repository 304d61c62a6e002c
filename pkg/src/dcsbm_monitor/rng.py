"""Counter-based random number generation.

Every random quantity in this package is a pure function of a 64-bit key
and a draw index, built from the splitmix64 finalizer.  There is no
sequential generator state, which buys two properties cheaply:

* a fixed seed reproduces results bit-for-bit no matter how work is
  scheduled across processes, and
* any draw can be recomputed in isolation (the numpy and numba kernel
  backends evaluate the same (key, index) -> uniform map).

Keys are derived with `derive(key, *indices)`; uniforms come from
`uniform(key, index)` and live in the open interval (0, 1).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

# Draw-index tags keep the per-(key, time) index spaces of different
# draw families disjoint.  Layout of a 64-bit index word:
#   tag(8) | item(48) | attempt(8)
TAG_THETA = 1
TAG_EDGE = 2
TAG_LABEL = 3
TAG_KMEANS = 4
TAG_GENERIC = 5

_U53 = float(2.0**-53)


def _mix(z: int) -> int:
    z &= MASK64
    z ^= z >> 30
    z = (z * MIX1) & MASK64
    z ^= z >> 27
    z = (z * MIX2) & MASK64
    z ^= z >> 31
    return z


def key_from_seed(seed: int) -> int:
    """Expand a user seed (any Python int) into a 64-bit stream key."""
    return _mix((seed & MASK64) ^ GOLDEN)


def derive(key: int, *indices: int) -> int:
    """Derive a child key; distinct index tuples give independent streams."""
    h = key & MASK64
    for ix in indices:
        h = _mix(((h + GOLDEN) & MASK64) ^ (ix & MASK64))
    return h


def draw_index(tag: int, item: int, attempt: int = 0) -> int:
    return ((tag & 0xFF) << 56) | ((item & ((1 << 48) - 1)) << 8) | (attempt & 0xFF)


def uniform(key: int, index: int) -> float:
    """Deterministic uniform in (0,1) for this (key, index) pair."""
    h = _mix(((key + GOLDEN) & MASK64) ^ (index & MASK64))
    return ((h >> 11) + 0.5) * _U53


def uniform_array(key: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized `uniform` over an array of uint64 draw indices."""
    h = np.uint64((key + GOLDEN) & MASK64) ^ indices.astype(np.uint64)
    h ^= h >> np.uint64(30)
    h *= np.uint64(MIX1)
    h ^= h >> np.uint64(27)
    h *= np.uint64(MIX2)
    h ^= h >> np.uint64(31)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
