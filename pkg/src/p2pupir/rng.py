"""Counter-based random streams.

Every random decision in a simulation is addressed by ``(seed, stream, draw)``
and computed by hashing, never by advancing shared generator state.  This keeps
traces reproducible regardless of evaluation order and lets the same draws be
produced one at a time (``Stream``) or for a whole batch of queries at once
(``uniform_batch``).

Scheme: ``key = mix(seed + G)``, ``sub = mix(key + (stream + 1) * G)`` and the
value of draw ``d`` is ``mix(sub + (d + 1) * G)`` where ``mix`` is the SplitMix64
finalizer and ``G = 0x9E3779B97F4A7C15``, all modulo 2**64.  The top 53 bits
give a double in [0, 1); integers below ``n`` are ``floor(u * n)``.

Stream ids: query ``q`` uses stream ``q``; the source of linked group ``g`` is
drawn from stream ``GROUP_NS + g``; DBWM round ``t`` uses ``ROUND_NS + t``.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)

GROUP_NS = 1 << 62
ROUND_NS = 2 << 62


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def root_key(seed: int) -> int:
    return mix64((seed & MASK) + GOLDEN)


def stream_key(seed: int, stream: int) -> int:
    return mix64(root_key(seed) + (stream + 1) * GOLDEN)


class Stream:
    """Random draws for one stream, addressed by draw index."""

    __slots__ = ("seed", "stream", "_key")

    def __init__(self, seed: int, stream: int):
        self.seed = seed
        self.stream = stream
        self._key = stream_key(seed, stream)

    def random(self, draw: int) -> float:
        return (mix64(self._key + (draw + 1) * GOLDEN) >> 11) / _TWO53

    def below(self, n: int, draw: int) -> int:
        return int(self.random(draw) * n)

    def __repr__(self):
        return f"Stream(seed={self.seed}, stream={self.stream})"


class SequentialStream:
    """Adapter handing out consecutive draws of a ``Stream``.

    Used by stateful simulations (DBWM) where the number of draws per step
    is not fixed in advance.
    """

    def __init__(self, seed: int, stream: int):
        self._stream = Stream(seed, stream)
        self.position = 0

    def random(self) -> float:
        u = self._stream.random(self.position)
        self.position += 1
        return u

    def below(self, n: int) -> int:
        return int(self.random() * n)


def stream_keys(seed: int, streams: np.ndarray) -> np.ndarray:
    streams = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(root_key(seed)) + (streams + np.uint64(1)) * np.uint64(GOLDEN)
        return _mix64_array(z)


def uniform_batch(keys: np.ndarray, draw: int) -> np.ndarray:
    """Draw ``draw`` of every stream whose key is in ``keys``."""
    offset = np.uint64(((draw + 1) * GOLDEN) & MASK)
    with np.errstate(over="ignore"):
        z = _mix64_array(keys + offset)
    return (z >> np.uint64(11)).astype(np.float64) / _TWO53


def below_batch(keys: np.ndarray, draw: int, n) -> np.ndarray:
    return (uniform_batch(keys, draw) * np.asarray(n, dtype=np.float64)).astype(np.int64)
