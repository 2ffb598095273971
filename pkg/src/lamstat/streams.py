"""Counter-based random draws keyed by integer tuples.

Every draw is a pure function of ``(seed, key_1, ..., key_m)``, built from
chained SplitMix64 finalisers over numpy ``uint64`` arrays. A simulator keys
its draws by (process, n, trial, round, slot, ...), so the value a trial sees
does not depend on batching, ordering or worker count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _u64(k) -> np.ndarray:
    if isinstance(k, (int, np.integer)):
        return np.array(int(k) & _MASK, dtype=np.uint64)
    return np.asarray(k).astype(np.uint64)


def hash_keys(seed: int, *keys) -> np.ndarray:
    """64-bit hash of the seed and keys; array keys broadcast together."""
    with np.errstate(over="ignore"):
        h = _mix(_u64(seed) + _GOLDEN)
        for k in keys:
            h = _mix(h ^ _mix(_u64(k) + _GOLDEN))
    return h


def uniform(seed: int, *keys) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53 random bits each."""
    return (hash_keys(seed, *keys) >> _S11).astype(np.float64) * (1.0 / (1 << 53))


def integers(bound, seed: int, *keys) -> np.ndarray:
    """Integers on ``0..bound-1``; per-value bias is at most ``bound * 2**-53``."""
    u = uniform(seed, *keys)
    return np.minimum(np.floor(u * bound).astype(np.int64), np.asarray(bound, dtype=np.int64) - 1)
