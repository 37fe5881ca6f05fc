"""Plain numpy transformer pieces used by the networks that never need gradients."""
from __future__ import annotations

import numpy as np

from ..tensor import gelu, layer_norm, softmax_rows


def ln(x, w, prefix):
    return layer_norm(x, w[f"{prefix}_g"], w[f"{prefix}_b"])


def ffn(x, w, prefix):
    h = gelu(x @ w[f"{prefix}_w1"] + w[f"{prefix}_b1"])
    return h @ w[f"{prefix}_w2"] + w[f"{prefix}_b2"]


def mha(x, w, prefix, heads, kv=None, causal=False, counter=None):
    """Standard multi-head attention with head dim d/heads; ``kv`` defaults to ``x``."""
    kv = x if kv is None else kv
    d = x.shape[1]
    dh = d // heads
    q = (x @ w[f"{prefix}_wq"]).reshape(x.shape[0], heads, dh).transpose(1, 0, 2)
    k = (kv @ w[f"{prefix}_wk"]).reshape(kv.shape[0], heads, dh).transpose(1, 0, 2)
    v = (kv @ w[f"{prefix}_wv"]).reshape(kv.shape[0], heads, dh).transpose(1, 0, 2)
    s = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
    if causal:
        n = x.shape[0]
        s = np.where(np.tril(np.ones((n, n), dtype=bool)), s, -1e30)
    if counter is not None:
        counter.add(heads * x.shape[0] * kv.shape[0])
    a = softmax_rows(s)
    o = (a @ v).transpose(1, 0, 2).reshape(x.shape[0], d)
    return o @ w[f"{prefix}_wo"]


def patch_cross_attn(y, x, w, prefix):
    """Cross-attention of text rows over patch rows with per-head full-width W_Q/W_K."""
    wq, wk, wv = w[f"{prefix}_wq"], w[f"{prefix}_wk"], w[f"{prefix}_wv"]
    d_t = y.shape[1]
    q = np.einsum("md,hde->hme", y, wq)
    k = np.einsum("kd,hde->hke", x, wk)
    a = softmax_rows(q @ k.transpose(0, 2, 1) / np.sqrt(d_t))
    v = np.einsum("kd,hde->hke", x, wv)
    o = np.concatenate(list(a @ v), axis=-1)
    return o @ w[f"{prefix}_wo"]


class PairCounter:
    """Tallies query-key token pairs scored by self-attention."""

    def __init__(self):
        self.pairs = 0

    def add(self, n):
        self.pairs += int(n)
