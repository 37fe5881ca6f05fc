import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnpvqa.relevance import RelevanceMap
from pnpvqa.rng import RngStream
from pnpvqa.sampling import Strategy, sample_patches


def rmap(values):
    return RelevanceMap(np.asarray(values, dtype=np.float64), 0, grid=(1, len(values)))


def frequencies(m, strategy, n, k_prime=1, seed=0):
    root = RngStream(seed, (9,))
    counts = np.zeros(m.k)
    for i in range(n):
        for j in sample_patches(m, k_prime, strategy, root.child(i)).indices:
            counts[j] += 1
    return counts / n


def test_single_draw_marginal_is_proportional():
    f = frequencies(rmap([0.1, 0.2, 0.3, 0.4]), "question_guided", 40_000)
    assert np.max(np.abs(f - [0.1, 0.2, 0.3, 0.4])) <= 0.01


def test_uniform_marginal():
    f = frequencies(rmap([0.1, 0.2, 0.3, 0.4]), "uniform", 40_000)
    assert np.max(np.abs(f - 0.25)) <= 0.01


def test_two_draw_inclusion_matches_exact_enumeration():
    w = np.array([0.1, 0.2, 0.3, 0.4])
    exact = np.zeros(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                pij = w[i] * w[j] / (1 - w[i])
                exact[i] += pij
                exact[j] += pij
    f = frequencies(rmap(w), "question_guided", 40_000, k_prime=2, seed=1)
    assert np.max(np.abs(f - exact)) <= 0.01


def test_zero_weight_never_drawn_until_forced():
    m = rmap([0.0, 1.0, 0.0, 2.0])
    for i in range(200):
        s = sample_patches(m, 2, "question_guided", RngStream(0, (i,)))
        assert s.indices == (1, 3)
    s = sample_patches(m, 3, "question", RngStream(0, (1,)))
    assert len(set(s.indices)) == 3 and {1, 3} <= set(s.indices)


def test_all_zero_map_falls_back_to_uniform():
    s = sample_patches(rmap([0, 0, 0, 0]), 2, "question_guided", RngStream(3))
    assert len(s.indices) == 2 and len(set(s.indices)) == 2


def test_all_and_oversized_requests():
    m = rmap([0.1, 0.2, 0.3])
    assert sample_patches(m, 1, "all", RngStream(0)).indices == (0, 1, 2)
    assert sample_patches(m, 5, "question_guided", RngStream(0)).indices == (0, 1, 2)
    with pytest.raises(ValueError):
        sample_patches(m, 0, "uniform", RngStream(0))
    assert Strategy.parse("random") is Strategy.UNIFORM


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=2, max_size=16), st.integers(1, 16),
       st.sampled_from(["question_guided", "uniform"]), st.integers(0, 10**6))
def test_subset_is_sorted_distinct_and_deterministic(w, kp, strategy, seed):
    m = rmap(w)
    s = sample_patches(m, kp, strategy, RngStream(seed))
    assert len(s.indices) == min(kp, m.k)
    assert list(s.indices) == sorted(set(s.indices))
    assert s == sample_patches(m, kp, strategy, RngStream(seed))
