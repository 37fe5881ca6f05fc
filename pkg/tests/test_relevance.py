import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnpvqa.attention import AttentionRecord, AttentionTrace, grad_wrt_attention
from pnpvqa.imageio import read_pgm
from pnpvqa.models import IteProbe, ite_forward
from pnpvqa.relevance import (RelevanceMap, compute_relevance, default_gradcam_layer,
                              export_heatmap, finite_diff_grads_probe, gradcam_relevance,
                              heatmap_pixels)
from pnpvqa.rng import RngStream
from pnpvqa.sampling import sample_patches
from pnpvqa.tensor import ShapeError

from conftest import GOLDEN, rel_error, small_instance


def trace_of(a):
    a = np.asarray(a, dtype=np.float64)
    return AttentionTrace((AttentionRecord(a, np.zeros_like(a)),))


def test_hand_case_exact():
    m = compute_relevance(trace_of([[[0.2, 0.8], [0.5, 0.5]]]), np.ones((1, 2, 2)), 0)
    assert m.rel.tolist() == [0.7, 1.3]


def test_negative_gradients_are_clamped():
    a = [[[0.2, 0.8], [0.5, 0.5]]]
    m = compute_relevance(trace_of(a), np.array([[[-1.0, 1.0], [1.0, -3.0]]]), 0)
    assert m.rel.tolist() == [0.5, 0.8]
    z = compute_relevance(trace_of(a), -np.ones((1, 2, 2)), 0)
    assert z.rel.tolist() == [0.0, 0.0]


def test_head_average():
    a = np.stack([np.full((1, 2), 0.5), np.array([[1.0, 0.0]])])
    m = compute_relevance(trace_of(a), np.ones((2, 1, 2)), 0)
    assert m.rel.tolist() == [0.75, 0.25]


def test_shape_and_layer_errors():
    tr = trace_of(np.full((1, 2, 2), 0.5))
    with pytest.raises(ShapeError):
        compute_relevance(tr, np.ones((1, 2, 3)), 0)
    with pytest.raises(IndexError):
        compute_relevance(tr, np.ones((1, 2, 2)), 1)
    with pytest.raises(ValueError):
        RelevanceMap(np.array([-0.1, 1.0]), 0, grid=(1, 2))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_nonnegative_and_scales_with_gradient(seed, c):
    rng = np.random.default_rng(seed)
    H, M, K = rng.integers(1, 4), rng.integers(1, 6), rng.integers(2, 10)
    logits = rng.normal(size=(H, M, K))
    a = np.exp(logits) / np.exp(logits).sum(-1, keepdims=True)
    g = rng.normal(size=(H, M, K))
    tr = trace_of(a)
    m1 = compute_relevance(tr, g, 0, grid=(1, K))
    m2 = compute_relevance(tr, c * g, 0, grid=(1, K))
    assert np.all(m1.rel >= 0)
    assert np.allclose(m2.rel, c * m1.rel, rtol=1e-12, atol=1e-300)
    if m1.rel.sum() > 0:
        s = RngStream(seed % 1000, (1,))
        kp = int(rng.integers(1, K))
        assert sample_patches(m1, kp, "question_guided", s) == sample_patches(m2, kp, "question_guided", s)


def test_default_layer_rule():
    assert default_gradcam_layer(12) == 8
    assert default_gradcam_layer(8) == 8
    assert default_gradcam_layer(2) == 2


def test_relevance_from_finite_differences_agrees(toy_bundle, toy_patches):
    bundle, patches, q = small_instance(7)
    _, tr = ite_forward(patches, q, bundle, record=True)
    for layer in range(2):
        g = grad_wrt_attention(tr, None, layer)
        fd = finite_diff_grads_probe(IteProbe(bundle, patches, q), layer, tr.attn(layer), 1e-3)
        assert rel_error(fd, g) <= 1e-4
        r_an = compute_relevance(tr, g, layer).rel
        r_fd = compute_relevance(tr, fd, layer).rel
        assert np.max(np.abs(r_an - r_fd)) <= 1e-4 * max(np.max(r_an), 1e-12)


def test_richardson_ratio():
    bundle, patches, q = small_instance(11)
    _, tr = ite_forward(patches, q, bundle, record=True)
    g = grad_wrt_attention(tr, None, 0)
    probe = IteProbe(bundle, patches, q)
    e1 = np.max(np.abs(finite_diff_grads_probe(probe, 0, tr.attn(0), 1e-2) - g))
    e2 = np.max(np.abs(finite_diff_grads_probe(probe, 0, tr.attn(0), 5e-3) - g))
    assert 3.0 <= e1 / e2 <= 5.0


def test_heatmap_one_hot_and_constant(tmp_path):
    m = RelevanceMap(np.eye(1, 16, 5).ravel(), 0, grid=(4, 4))
    px = heatmap_pixels(m, scale=1)
    assert px[1, 1] == 255 and px.sum() == 255
    big = heatmap_pixels(m)
    assert big.shape == (64, 64) and np.all(big[16:32, 16:32] == 255)
    const = RelevanceMap(np.full(4, 0.3), 0, grid=(2, 2))
    assert np.all(heatmap_pixels(const) == 128)
    p = export_heatmap(m, tmp_path / "h.pgm")
    assert np.array_equal(read_pgm(p), big)
    assert open(p, "rb").read().startswith(b"P5\n64 64\n255\n")


def test_toy_relevance_heatmap_golden(toy_bundle, toy_patches, tmp_path):
    m = gradcam_relevance(toy_bundle, toy_patches, "What color is the ball?", 1, "q0")
    assert m.grid == (4, 4) and np.all(m.rel >= 0) and m.rel.sum() > 0
    out = export_heatmap(m, tmp_path / "q0.pgm")
    assert open(out, "rb").read() == (GOLDEN / "heatmap_q0_layer2.pgm").read_bytes()
