"""Counter-based random streams keyed on (seed, purpose, task, stage, job index).

Draws are pure functions of their key, so any two topologies that share a
(seed, stream) pair see bit-identical variates regardless of evaluation
order, thread count, or how many other streams were consumed.  This is what
makes coupled-trace comparisons (fork-join vs split-merge vs single-queue)
and the identical-stage service mode possible.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# stream purposes
ARRIVAL = 1
SERVICE = 2
ASSIGN = 3

_U64_GOLDEN = np.uint64(_GOLDEN)
_U64_MIX1 = np.uint64(_MIX1)
_U64_MIX2 = np.uint64(_MIX2)
_TWO53 = float(1 << 53)


def _mix_scalar(x: int) -> int:
    """SplitMix64 finalizer on a Python int (no numpy scalar overflow warnings)."""
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + _U64_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, purpose: int, task: int = 0, stage: int = 0) -> int:
    k = _mix_scalar(seed & _MASK)
    k = _mix_scalar(k ^ ((purpose * 0xD6E8FEB86659FD93) & _MASK))
    k = _mix_scalar(k ^ ((task * 0xA5CB3D9469E9CB6B) & _MASK))
    k = _mix_scalar(k ^ ((stage * 0x2545F4914F6CDD1D) & _MASK))
    return k


def uniforms(key: int, start: int, count: int) -> np.ndarray:
    """count uniforms in the open interval (0, 1) at counters start..start+count-1."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    h = _mix_array(np.uint64(key) ^ _mix_array(idx))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53


def uniforms_at(key: int, indices: np.ndarray) -> np.ndarray:
    """Uniforms at explicit counter positions (used for gathered sub-streams)."""
    idx = np.asarray(indices, dtype=np.uint64)
    h = _mix_array(np.uint64(key) ^ _mix_array(idx))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53
