from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pnpvqa import tensor as T
from pnpvqa.tensor import NonFiniteError, ShapeError, Var


def naive_matmul(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += float(a[i, t]) * float(b[t, j])
            out[i][j] = s
    return np.array(out)


def test_matmul_identity_and_hand_case():
    m = np.array([[1.5, -2.0], [0.25, 7.0]])
    assert np.array_equal(T.matmul(np.eye(2), m), m)
    assert np.array_equal(T.matmul([[1, 2], [3, 4]], [[1], [1]]), [[3.0], [7.0]])


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(8, 8)), rng.normal(size=(8, 8))
    assert np.max(np.abs(T.matmul(a, b) - naive_matmul(a, b))) <= 1e-12


def test_matmul_rejects_bad_shapes_and_nonfinite():
    with pytest.raises(ShapeError):
        T.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        T.matmul(np.ones(3), np.ones((3, 1)))
    with pytest.raises(NonFiniteError):
        T.matmul(np.array([[np.nan]]), np.ones((1, 1)))
    with pytest.raises(NonFiniteError):
        T.matmul(np.array([[1e200]]), np.array([[1e200]]))


def decimal_softmax(row):
    getcontext().prec = 50
    e = [Decimal(repr(float(v))).exp() for v in row]
    s = sum(e)
    return np.array([float(x / s) for x in e])


def test_softmax_cases():
    assert np.array_equal(T.softmax_rows(np.zeros(4)), np.full(4, 0.25))
    for x in (-30.0, 0.0, 3.5, 700.0):
        assert np.allclose(T.softmax_rows(np.full(3, x)), 1 / 3, rtol=0, atol=1e-15)
    row = np.array([2.0, 1.0, 0.0, -1.0])
    assert np.max(np.abs(T.softmax_rows(row) - decimal_softmax(row))) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 9)),
              elements=st.floats(-1e4, 1e4, allow_nan=False)))
def test_softmax_rows_sum_to_one(x):
    s = T.softmax_rows(x)
    assert np.all(s >= 0)
    assert np.allclose(s.sum(axis=-1), 1.0, atol=1e-6)


def test_softmax_rejects_nan():
    with pytest.raises(NonFiniteError):
        T.softmax_rows([0.0, np.inf])


# ---- autodiff tape against central differences ----


def numeric_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        up, dn = x.copy(), x.copy()
        up[idx] += eps
        dn[idx] -= eps
        g[idx] = (f(up) - f(dn)) / (2 * eps)
    return g


def test_tape_gradients_match_numeric():
    rng = np.random.default_rng(1)
    x0 = rng.normal(size=(3, 4))
    w = rng.normal(size=(4, 4))
    gam, bet = rng.normal(size=4), rng.normal(size=4)
    v = rng.normal(size=4)

    def build(xv):
        x = Var(xv)
        h = T.vlayer_norm(T.vgelu(x @ w), gam, bet)
        a = T.softmax(T.scale(h @ h.T, 0.5))
        y = T.concat_cols([T.cols(a @ h, 0, 2), T.cols(h, 2, 4)])
        s = T.vsum(T.row(y, 1) * v) + T.vsum(T.mul(y, y))
        return x, s

    x, s = build(x0)
    (g,) = T.grad(s, [x])
    num = numeric_grad(lambda xv: float(build(xv)[1].value), x0)
    assert np.max(np.abs(g - num)) <= 1e-6 * max(1.0, np.max(np.abs(num)))


def test_grad_of_unreachable_node_is_zero():
    a, b = Var(np.ones((2, 2))), Var(np.ones(3))
    (ga, gb) = T.grad(T.vsum(a), [a, b])
    assert np.array_equal(ga, np.ones((2, 2)))
    assert np.array_equal(gb, np.zeros(3))


def test_grad_needs_scalar():
    a = Var(np.ones(2))
    with pytest.raises(ShapeError):
        T.grad(a, [a])
