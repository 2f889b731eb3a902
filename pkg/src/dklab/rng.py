"""Splittable, counter-based random streams.

Every stochastic module draws from an RngStream keyed by (seed, stream_id).
Streams with distinct keys are statistically independent Philox-4x64
sequences, and the output of a stream depends only on its key and the
order of draws on it, never on scheduling.  The convention used by the
simulation drivers is

    stream_id = replicate_index * 2**32 + particle_index

so any replicate/particle pair can be re-derived in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PARTICLE_BITS = 32
REPLICATE_STRIDE = 1 << _PARTICLE_BITS

_MASK64 = (1 << 64) - 1


def _philox_state(seed: int, stream_id: int) -> dict:
    return {
        "bit_generator": "Philox",
        "state": {
            "counter": np.zeros(4, dtype=np.uint64),
            "key": np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64),
        },
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }


@dataclass
class RngStream:
    """One logical random stream, owned by a single task at a time."""

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            bg = np.random.Philox(key=(self.seed & _MASK64, self.stream_id & _MASK64))
            self._gen = np.random.Generator(bg)
        return self._gen

    def child(self, offset: int) -> "RngStream":
        """Derived stream (seed, stream_id + offset); used for per-particle streams."""
        return RngStream(self.seed, self.stream_id + offset)


def replicate_stream(seed: int, replicate: int) -> RngStream:
    """Base stream of a replicate; particle i then uses .child(i)."""
    return RngStream(seed, replicate * REPLICATE_STRIDE)


def gaussian_increment(stream: RngStream, count: int, variance: float) -> np.ndarray:
    """count independent centered normals with the given variance.

    Deterministic given (seed, stream_id, call index).  variance = 0 is
    accepted as the degenerate no-motion case and returns zeros without
    consuming the stream.
    """
    if count < 1:
        raise ValueError("count must be a positive integer")
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    if variance == 0.0:
        return np.zeros(count)
    return stream.generator.standard_normal(count) * np.sqrt(variance)


class StreamBank:
    """Fast sequential access to many (seed, stream_id) streams.

    Reuses a single Philox bit generator and resets its state per stream,
    which is bit-identical to constructing a fresh RngStream each time but
    roughly an order of magnitude faster.  Intended for replicate loops;
    not thread-safe, give each worker its own bank.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bg = np.random.Philox(key=(self.seed & _MASK64, 0))
        self._gen = np.random.Generator(self._bg)

    def normals(self, stream_id: int, count: int) -> np.ndarray:
        self._bg.state = _philox_state(self.seed, stream_id)
        return self._gen.standard_normal(count)


def derive_seed(seed: int, label: int) -> int:
    """Deterministic 64-bit sub-seed for independent experiment cells."""
    ss = np.random.SeedSequence(entropy=(int(seed) & _MASK64, int(label) & _MASK64))
    return int(ss.generate_state(1, np.uint64)[0])
