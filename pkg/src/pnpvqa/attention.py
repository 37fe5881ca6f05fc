"""Recorded cross-attention and gradients with respect to attention maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Var


@dataclass(frozen=True)
class CrossAttentionParams:
    """Per-head query/key maps plus value and output projections.

    w_q: (H, D_t, D_t); w_k: (H, D_v, D_t); w_v: (H, D_v, D_t // H); w_o: (D_t, D_t)
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]


@dataclass(frozen=True)
class AttentionRecord:
    attn: np.ndarray            # (H, M, K)
    logits: np.ndarray          # (H, M, K), pre-softmax
    nodes: tuple = ()           # one Var per head when recorded


@dataclass(frozen=True)
class AttentionTrace:
    layers: tuple = ()
    output: Optional[Var] = None
    recorded: bool = False

    def attn(self, layer: int) -> np.ndarray:
        return self.layers[layer].attn


class TraceError(RuntimeError):
    pass


def _check_params(y: np.ndarray, x: np.ndarray, p: CrossAttentionParams):
    H, d_t, d_t2 = p.w_q.shape
    if y.ndim != 2 or x.ndim != 2:
        raise ShapeError("y and x must be matrices")
    if d_t != d_t2 or y.shape[1] != d_t:
        raise ShapeError(f"W_Q {p.w_q.shape} does not fit y {y.shape}")
    if p.w_k.shape != (H, x.shape[1], d_t):
        raise ShapeError(f"W_K {p.w_k.shape} does not fit x {x.shape}")
    if p.w_v.shape[:2] != (H, x.shape[1]) or p.w_v.shape[2] * H != d_t:
        raise ShapeError(f"W_V {p.w_v.shape} inconsistent")
    if p.w_o.shape != (d_t, d_t):
        raise ShapeError(f"W_O {p.w_o.shape} inconsistent")


def cross_attention_forward(y, x, params: CrossAttentionParams, record: bool = False,
                            a_override: Optional[np.ndarray] = None):
    """Multi-head cross-attention of text rows ``y`` (M x D_t) over patch rows ``x`` (K x D_v).

    Per head, A = softmax(y W_Q W_K^T x^T / sqrt(D_t)).  The heads' value
    combinations A x W_V are concatenated and projected by W_O.

    ``a_override`` (H, M, K) replaces the attention maps with constant
    leaves; the logits are still computed and stored but nothing flows
    from them.  Returns ``(output, trace)`` where the trace holds one
    record.
    """
    y, x = T.lift(y), T.lift(x)
    _check_params(y.value, x.value, params)
    H = params.heads
    M, K = y.shape[0], x.shape[0]
    d_t = y.shape[1]
    if a_override is not None:
        a_override = T.as_tensor(a_override)
        if a_override.shape != (H, M, K):
            raise ShapeError(f"override shape {a_override.shape} != recorded {(H, M, K)}")
    inv = 1.0 / np.sqrt(d_t)
    heads, nodes, logits = [], [], []
    for h in range(H):
        q = y @ params.w_q[h]
        k = x @ params.w_k[h]
        z = T.scale(q @ k.T, inv)
        logits.append(z.value)
        a = Var(a_override[h]) if a_override is not None else T.softmax(z)
        nodes.append(a)
        heads.append(a @ (x @ params.w_v[h]))
    out = T.concat_cols(heads) @ params.w_o
    rec = AttentionRecord(
        attn=np.stack([a.value for a in nodes]),
        logits=np.stack(logits),
        nodes=tuple(nodes) if record else (),
    )
    return out, AttentionTrace(layers=(rec,), output=None, recorded=record)


def merge_traces(traces, output: Optional[Var], recorded: bool) -> AttentionTrace:
    layers = tuple(r for t in traces for r in t.layers)
    return AttentionTrace(layers=layers, output=output, recorded=recorded)


def grad_wrt_attention(trace: AttentionTrace, scalar_output: Optional[Var] = None,
                       layer: int = 0) -> np.ndarray:
    """Gradient of a scalar with respect to the recorded attention maps at ``layer``.

    Each map is treated as its own node: the adjoint is taken at the
    post-softmax values and not pushed further back into the logits.
    """
    if not trace.recorded:
        raise TraceError("trace was not recorded")
    if not 0 <= layer < len(trace.layers):
        raise IndexError(f"layer {layer} out of range (trace has {len(trace.layers)})")
    scalar = scalar_output if scalar_output is not None else trace.output
    if scalar is None:
        raise TraceError("no scalar output attached to the trace")
    nodes = trace.layers[layer].nodes
    return np.stack(T.grad(scalar, nodes))


def frozen_attention_forward(model_state: Callable[[Mapping[int, np.ndarray]], Var],
                             layer: int, a_override: np.ndarray) -> float:
    """Re-run ``model_state`` with the attention maps at ``layer`` pinned to ``a_override``.

    ``model_state`` is any callable taking ``{layer: maps}`` and returning
    the scalar node; the ITE probe in ``pnpvqa.models.ite`` is the main one.
    """
    return float(model_state({layer: np.asarray(a_override, dtype=np.float64)}).value)
