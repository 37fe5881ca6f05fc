import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnpvqa.captioning import (CaptionSet, DecodeConfig, DecodeConfigError, decode_distribution,
                               decode_next, dedup_filter, generate_caption, generate_caption_set)
from pnpvqa.relevance import gradcam_relevance
from pnpvqa.rng import RngStream
from pnpvqa.sampling import sample_patches

from conftest import GOLDEN

TOPK2 = DecodeConfig("top_k", k=2)


def test_top_k_one_is_argmax():
    cfg = DecodeConfig("top_k", k=1)
    logits = np.array([0.3, 2.0, 1.9, -4.0])
    assert {decode_next(logits, cfg, RngStream(0, (i,))) for i in range(50)} == {1}


def test_top_k_two_frequencies():
    n = 20_000
    draws = np.array([decode_next([2.0, 1.0, 0.0, -1.0], TOPK2, RngStream(1, (i,))) for i in range(n)])
    assert set(np.unique(draws)) <= {0, 1}
    p0 = 1 / (1 + np.exp(-1.0))
    assert abs(np.mean(draws == 0) - p0) <= 0.015


def test_nucleus_includes_boundary_token():
    probs = decode_distribution(np.log([0.5, 0.3, 0.15, 0.05]), DecodeConfig("nucleus", p=0.7))
    assert np.count_nonzero(probs) == 2
    assert np.allclose(probs[:2], [0.5 / 0.8, 0.3 / 0.8])
    probs = decode_distribution(np.log([0.5, 0.3, 0.15, 0.05]), DecodeConfig("nucleus", p=0.79))
    assert np.count_nonzero(probs) == 2
    probs = decode_distribution(np.log([0.5, 0.3, 0.15, 0.05]), DecodeConfig("nucleus", p=0.81))
    assert np.count_nonzero(probs) == 3


def test_nucleus_one_equals_temperature_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = rng.normal(scale=3, size=20)
        a = decode_distribution(z, DecodeConfig("nucleus", p=1.0))
        b = decode_distribution(z, DecodeConfig("temperature", temp=1.0))
        assert np.allclose(a, b, rtol=0, atol=1e-15)


def test_tiny_temperature_is_argmax():
    rng = np.random.default_rng(1)
    cfg = DecodeConfig("temperature", temp=1e-6)
    for i in range(200):
        z = rng.normal(size=30)
        assert decode_next(z, cfg, RngStream(2, (i,))) == int(np.argmax(z))


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 40), st.floats(0.05, 1.0))
def test_stochastic_supports(seed, k, p):
    rng = np.random.default_rng(seed)
    z = rng.normal(scale=rng.uniform(0.1, 5), size=40)
    tk = decode_next(z, DecodeConfig("top_k", k=k), RngStream(seed, (0,)))
    assert tk in set(np.argsort(-z, kind="stable")[:k])
    probs = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
    order = np.argsort(-probs, kind="stable")
    n = int(np.searchsorted(np.cumsum(probs[order]), p)) + 1
    nu = decode_next(z, DecodeConfig("nucleus", p=p), RngStream(seed, (1,)))
    assert nu in set(order[:n])


def test_decode_config_validation_and_labels():
    with pytest.raises(DecodeConfigError):
        DecodeConfig("greedy")
    with pytest.raises(DecodeConfigError):
        DecodeConfig("nucleus", p=0.0)
    with pytest.raises(DecodeConfigError):
        DecodeConfig("temperature", temp=0.0)
    DecodeConfig("top_k", p=7.0)  # unused parameters are not consulted
    labels = [DecodeConfig.parse(s).label for s in
              ("beam", "temp:0.5", "temp:1", "nucleus:0.9", "nucleus:0.95", "topk:50", "topk:100")]
    assert labels == ["Beam search", "Temperature (t=0.5)", "Temperature (t=1)", "Nucleus (p=0.9)",
                      "Nucleus (p=0.95)", "Top-k (k=50)", "Top-k (k=100)"]


# ---- dedup ----


def test_dedup_examples():
    assert dedup_filter(["a dog on grass", "a dog"]) == ["a dog on grass"]
    assert dedup_filter(["a dog", "a dog on grass"]) == ["a dog", "a dog on grass"]
    assert dedup_filter(["a cat", "a cat"]) == ["a cat"]
    assert dedup_filter(["A Cat!", "a cat"]) == ["A Cat!"]


WORDS = st.sampled_from(["a", "dog", "cat", "on", "grass", "red", "ball"])


@settings(max_examples=500, deadline=None)
@given(st.lists(st.lists(WORDS, max_size=5).map(" ".join), max_size=12))
def test_dedup_postcondition(caps):
    kept = dedup_filter(caps)
    for i, c in enumerate(kept):
        for earlier in kept[:i]:
            assert c not in earlier
    # dropped captions really were covered by something kept before them
    for c in caps:
        if c not in kept:
            assert any(c in k for k in kept)


# ---- generation on the toy bundle ----


@pytest.fixture(scope="module")
def q0_map(toy_bundle, toy_patches):
    return gradcam_relevance(toy_bundle, toy_patches, "What color is the ball?", 1, "q0")


def test_generation_is_deterministic_per_stream(toy_bundle, toy_patches, q0_map):
    cfg = DecodeConfig()
    sub = sample_patches(q0_map, 20, "question_guided", RngStream(0, (0,)))
    a = generate_caption(toy_patches, sub, cfg, toy_bundle, RngStream(0, (1,)))
    assert a == generate_caption(toy_patches, sub, cfg, toy_bundle, RngStream(0, (1,)))
    others = {generate_caption(toy_patches, sub, cfg, toy_bundle, RngStream(0, (i,))) for i in range(2, 8)}
    assert len(others | {a}) > 1


def test_beam_is_deterministic_and_dedups_to_one(toy_bundle, toy_patches, q0_map):
    cfg = DecodeConfig("beam")
    a = generate_caption(toy_patches, range(16), cfg, toy_bundle)
    assert a == generate_caption(toy_patches, range(16), cfg, toy_bundle)
    cs = generate_caption_set(q0_map, toy_patches, 5, 20, "all", cfg, toy_bundle, RngStream(0))
    assert cs.n_kept == 1 and cs.n_requested == 5


def test_prompt_only_when_length_one(toy_bundle, toy_patches):
    cfg = DecodeConfig(max_caption_len=1)
    assert generate_caption(toy_patches, [0, 1], cfg, toy_bundle, RngStream(0)) == ""
    with pytest.raises(ValueError):
        generate_caption(toy_patches, [], DecodeConfig(), toy_bundle, RngStream(0))
    with pytest.raises(DecodeConfigError):
        generate_caption(toy_patches, [0], DecodeConfig(max_caption_len=40), toy_bundle, RngStream(0))


def test_caption_set_zero_and_prefix_nesting(toy_bundle, toy_patches, q0_map):
    cfg = DecodeConfig()
    assert generate_caption_set(q0_map, toy_patches, 0, 20, "question", cfg, toy_bundle,
                                RngStream(0)).n_kept == 0
    small = generate_caption_set(q0_map, toy_patches, 6, 20, "question", cfg, toy_bundle, RngStream(0))
    big = generate_caption_set(q0_map, toy_patches, 12, 20, "question", cfg, toy_bundle, RngStream(0))
    assert big.captions[:small.n_kept] == small.captions
    for c in small.captions:
        assert c.rng_path[1] == 1 and len(c.subset) == 16


def test_caption_order_independence(toy_bundle, toy_patches, q0_map):
    cfg = DecodeConfig()
    root = RngStream(4)
    fwd = [generate_caption(toy_patches, sample_patches(q0_map, 5, "question", root.child(i, 0)),
                            cfg, toy_bundle, root.child(i, 1)) for i in range(4)]
    rev = [generate_caption(toy_patches, sample_patches(q0_map, 5, "question", root.child(i, 0)),
                            cfg, toy_bundle, root.child(i, 1)) for i in reversed(range(4))]
    assert fwd == rev[::-1]
    cs = generate_caption_set(q0_map, toy_patches, 4, 5, "question", cfg, toy_bundle, root)
    assert cs.texts == dedup_filter(fwd)


def test_golden_caption_list(toy_bundle, toy_patches, q0_map):
    cs = generate_caption_set(q0_map, toy_patches, 8, 20, "question_guided", DecodeConfig(),
                              toy_bundle, RngStream(0, (0,)))
    got = [{"text": c.text, "subset": list(c.subset), "rng_path": list(c.rng_path)} for c in cs.captions]
    assert got == json.loads((GOLDEN / "captions_q0_n8.json").read_text())


def test_from_texts_keeps_everything():
    cs = CaptionSet.from_texts(["a", "a"])
    assert cs.n_kept == 2 and cs.texts == ["a", "a"]
