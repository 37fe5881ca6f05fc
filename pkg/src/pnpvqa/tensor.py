"""Dense float64 kernels and a small reverse-mode autodiff tape.

Arrays are plain ``numpy.ndarray`` objects in float64.  ``Var`` wraps an
array together with the closure needed to push adjoints back to its
parents; only the handful of ops used by the attention models exist.
"""
from __future__ import annotations

import numpy as np


class NonFiniteError(ValueError):
    """Raised when a NaN or Inf shows up in an input or intermediate."""


class ShapeError(ValueError):
    pass


def as_tensor(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    check_finite(a)
    return a


def check_finite(a: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite value in {what}")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dims disagree: {a.shape} x {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    return check_finite(out, "matmul output")


def softmax_rows(x) -> np.ndarray:
    """Softmax over the last axis with max-subtraction."""
    x = as_tensor(x)
    if x.ndim < 1:
        raise ShapeError("softmax_rows needs rank >= 1")
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


GELU_C = np.sqrt(2.0 / np.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + 0.044715 * x**3)))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    u = GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    du = GELU_C * (1.0 + 3 * 0.044715 * x**2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du


LN_EPS = 1e-5


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LN_EPS) * gamma + beta


# --------------------------------------------------------------------------
# autodiff


class Var:
    """A node on the autodiff tape.

    ``value`` is never mutated after construction.  ``_back`` maps the
    adjoint of this node to a tuple of adjoints, one per parent.
    """

    __slots__ = ("value", "parents", "_back")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, value, parents=(), back=None):
        self.value = check_finite(np.asarray(value, dtype=np.float64), "autodiff node")
        self.parents = tuple(parents)
        self._back = back

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return mm(self, other)

    @property
    def T(self):
        return transpose(self)


def lift(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Var:
    a, b = lift(a), lift(b)
    return Var(a.value + b.value, (a, b),
               lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b) -> Var:
    a, b = lift(a), lift(b)
    av, bv = a.value, b.value
    return Var(av * bv, (a, b),
               lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def mm(a, b) -> Var:
    a, b = lift(a), lift(b)
    if a.value.shape[-1] != b.value.shape[0]:
        raise ShapeError(f"inner dims disagree: {a.shape} x {b.shape}")
    av, bv = a.value, b.value
    return Var(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(a) -> Var:
    a = lift(a)
    return Var(a.value.T, (a,), lambda g: (g.T,))


def scale(a, c: float) -> Var:
    a = lift(a)
    return Var(a.value * c, (a,), lambda g: (g * c,))


def vsum(a) -> Var:
    a = lift(a)
    shp = a.shape
    return Var(a.value.sum(), (a,), lambda g: (np.broadcast_to(g, shp).copy(),))


def row(a, i: int) -> Var:
    a = lift(a)
    shp = a.shape

    def back(g):
        out = np.zeros(shp)
        out[i] = g
        return (out,)

    return Var(a.value[i], (a,), back)


def cols(a, start: int, stop: int) -> Var:
    a = lift(a)
    shp = a.shape

    def back(g):
        out = np.zeros(shp)
        out[..., start:stop] = g
        return (out,)

    return Var(a.value[..., start:stop], (a,), back)


def concat_cols(parts) -> Var:
    parts = [lift(p) for p in parts]
    widths = np.cumsum([0] + [p.shape[-1] for p in parts])

    def back(g):
        return tuple(g[..., widths[k]:widths[k + 1]] for k in range(len(parts)))

    return Var(np.concatenate([p.value for p in parts], axis=-1), parts, back)


def softmax(a) -> Var:
    a = lift(a)
    s = softmax_rows(a.value)

    def back(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return Var(s, (a,), back)


def vgelu(a) -> Var:
    a = lift(a)
    x = a.value
    return Var(gelu(x), (a,), lambda g: (g * _gelu_grad(x),))


def vlayer_norm(a, gamma, beta) -> Var:
    a, gamma, beta = lift(a), lift(gamma), lift(beta)
    x = a.value
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    gv = gamma.value

    def back(g):
        gx = g * gv
        dx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        return (dx,
                _unbroadcast(g * xhat, gamma.shape),
                _unbroadcast(g, beta.shape))

    return Var(xhat * gv + beta.value, (a, gamma, beta), back)


def grad(output: Var, wrt) -> list[np.ndarray]:
    """Adjoints of a scalar ``output`` with respect to each node in ``wrt``.

    Nodes in ``wrt`` that the output does not depend on get zero arrays.
    """
    if output.value.size != 1:
        raise ShapeError("grad needs a scalar output")
    order = []
    seen = set()
    stack = [(output, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    adj = {id(output): np.ones_like(output.value)}
    for node in reversed(order):
        g = adj.get(id(node))
        if g is None or node._back is None:
            continue
        for p, gp in zip(node.parents, node._back(g)):
            if id(p) in adj:
                adj[id(p)] = adj[id(p)] + gp
            else:
                adj[id(p)] = gp
    return [adj.get(id(w), np.zeros_like(w.value)) for w in wrt]
