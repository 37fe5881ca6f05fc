from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .relevance import RelevanceMap
from .rng import RngStream


class Strategy(str, Enum):
    QUESTION_GUIDED = "question_guided"
    UNIFORM = "uniform"
    ALL = "all"

    @classmethod
    def parse(cls, s) -> "Strategy":
        if isinstance(s, cls):
            return s
        aliases = {"question": cls.QUESTION_GUIDED, "random": cls.UNIFORM}
        return aliases.get(s) or cls(s)


@dataclass(frozen=True)
class PatchSubset:
    indices: tuple[int, ...]
    strategy: Strategy
    k_prime: int


def _draw_without_replacement(weights: np.ndarray, n: int, stream: RngStream) -> list[int]:
    """Successive draws proportional to ``weights``; a chosen index is removed and
    the rest renormalised.  When every remaining weight is zero the draw is uniform
    over what is left."""
    w = np.array(weights, dtype=np.float64)
    alive = np.ones(w.size, dtype=bool)
    u = stream.uniforms(n)
    chosen = []
    for d in range(n):
        cur = np.where(alive, w, 0.0)
        if not cur.any():
            cur = alive.astype(np.float64)
        cum = np.cumsum(cur)
        i = int(np.searchsorted(cum, u[d] * cum[-1], side="right"))
        if i >= w.size:  # u * total rounded up to total
            i = int(np.flatnonzero(cur)[-1])
        chosen.append(i)
        alive[i] = False
    return chosen


def sample_patches(rel_map: RelevanceMap, k_prime: int, strategy, stream: RngStream) -> PatchSubset:
    """Patch subset shown to the captioner; indices come back sorted ascending."""
    strategy = Strategy.parse(strategy)
    if k_prime < 1:
        raise ValueError(f"k_prime must be >= 1, got {k_prime}")
    K = rel_map.k
    if strategy is Strategy.ALL or k_prime >= K:
        return PatchSubset(tuple(range(K)), strategy, k_prime)
    if strategy is Strategy.UNIFORM:
        weights = np.ones(K)
    else:
        weights = rel_map.rel
    idx = _draw_without_replacement(weights, k_prime, stream)
    return PatchSubset(tuple(sorted(idx)), strategy, k_prime)
