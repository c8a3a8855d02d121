"""Counter-based uniforms keyed by ``(seed, shot, instruction, lane)``.

Every random number consumed by the frame sampler is a pure function of its
key, so shots can be evaluated in any order, in any batch size and on any
worker with bit-identical results. The mixing function is the SplitMix64
finalizer applied in a chain over the key words.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_LANES = 4


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _absorb(state: np.ndarray, word) -> np.ndarray:
    return _mix(state + np.asarray(word, dtype=np.uint64) * _GOLDEN + _GOLDEN)


def counter_uint64(seed: int, shot, instr, lane) -> np.ndarray:
    """Raw 64-bit output for the broadcast key arrays."""
    with np.errstate(over="ignore"):
        return _chain(seed, shot, instr, lane)


def _chain(seed, shot, instr, lane):
    state = _mix(np.asarray(seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64) + _GOLDEN)
    state = _absorb(state, shot)
    state = _absorb(state, np.asarray(instr, dtype=np.uint64) * np.uint64(_LANES) + np.asarray(lane, dtype=np.uint64))
    return state


def counter_uniform(seed: int, shot, instr, lane) -> np.ndarray:
    """Uniform doubles in ``[0, 1)`` with 53 random bits."""
    bits = counter_uint64(seed, shot, instr, lane) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / (1 << 53))
