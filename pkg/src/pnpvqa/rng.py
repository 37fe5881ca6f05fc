"""Path-addressed counter-based random streams.

A stream is identified by ``(root_seed, path)``.  The path is hashed into
a Philox key through ``numpy.random.SeedSequence``, so the values drawn
from a stream depend on nothing but its address.  Nothing is shared
between streams and nothing is mutated: two calls on the same stream
return the same numbers, and the order in which different streams are
consumed cannot change any of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    root_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if self.root_seed < 0 or any(p < 0 for p in self.path):
            raise ValueError("seed and path entries must be non-negative")

    def child(self, *idx: int) -> "RngStream":
        return RngStream(self.root_seed, self.path + tuple(idx))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at counter 0 of this stream."""
        key = np.random.SeedSequence(self.root_seed, spawn_key=self.path).generate_state(2, np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def uint64s(self, n: int) -> np.ndarray:
        return self.generator().integers(0, 2**64, size=n, dtype=np.uint64, endpoint=False)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` floats in [0, 1)."""
        return self.generator().random(n)

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])


def rng_next(stream: RngStream, n: int = 1, kind: str = "float") -> np.ndarray:
    """First ``n`` values of ``stream``, as unit floats or raw 64-bit words."""
    if kind == "float":
        return stream.uniforms(n)
    if kind == "uint64":
        return stream.uint64s(n)
    raise ValueError(f"unknown kind {kind!r}")
