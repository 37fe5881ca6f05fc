"""Question-guided patch relevance from gradient-weighted cross-attention."""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .attention import AttentionTrace, frozen_attention_forward, grad_wrt_attention
from .imageio import write_pgm
from .models.ite import IteProbe, as_tokens, ite_forward
from .tensor import NonFiniteError, ShapeError

HEATMAP_SCALE = 16


@dataclass(frozen=True)
class RelevanceMap:
    rel: np.ndarray
    layer: int              # 0-based index into the ITE's cross-attention layers
    question_id: str = ""
    grid: tuple[int, int] = (1, 1)

    def __post_init__(self):
        rel = np.asarray(self.rel, dtype=np.float64)
        if rel.ndim != 1:
            raise ShapeError("rel must be 1-d")
        if rel.size != self.grid[0] * self.grid[1]:
            raise ShapeError(f"rel has {rel.size} entries, grid {self.grid} needs {self.grid[0] * self.grid[1]}")
        if np.any(rel < 0):
            raise ValueError("relevance must be non-negative")
        rel.flags.writeable = False
        object.__setattr__(self, "rel", rel)

    @property
    def k(self) -> int:
        return self.rel.size


def default_gradcam_layer(n_layers: int) -> int:
    """1-based layer number: the 8th cross-attention layer when it exists, else the last."""
    return 8 if n_layers >= 8 else n_layers


def compute_relevance(trace: AttentionTrace, grads: np.ndarray, layer: int,
                      question_id: str = "", grid: Optional[tuple[int, int]] = None) -> RelevanceMap:
    """rel(i) = (1/H) * sum_j sum_h max(0, dS/dA[h, j, i]) * A[h, j, i]."""
    if not 0 <= layer < len(trace.layers):
        raise IndexError(f"layer {layer} out of range (trace has {len(trace.layers)})")
    a = trace.layers[layer].attn
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != a.shape:
        raise ShapeError(f"grads shape {grads.shape} != attention shape {a.shape}")
    H = a.shape[0]
    rel = (np.maximum(grads, 0.0) * a).sum(axis=(0, 1)) / H
    return RelevanceMap(rel, layer, question_id, grid if grid is not None else (1, a.shape[2]))


def finite_diff_grads_probe(probe: Callable, layer: int, base: np.ndarray,
                            epsilon: float) -> np.ndarray:
    """Central differences of ``probe`` around attention maps ``base`` at ``layer``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    base = np.asarray(base, dtype=np.float64)
    out = np.zeros_like(base)
    for idx in np.ndindex(*base.shape):
        up = base.copy()
        up[idx] += epsilon
        dn = base.copy()
        dn[idx] -= epsilon
        f_up = frozen_attention_forward(probe, layer, up)
        f_dn = frozen_attention_forward(probe, layer, dn)
        if not (np.isfinite(f_up) and np.isfinite(f_dn)):
            raise NonFiniteError(f"non-finite probe output at {idx}")
        out[idx] = (f_up - f_dn) / (2.0 * epsilon)
    return out


def finite_diff_grads(bundle, patches, question, layer: int, epsilon: float = 1e-3) -> np.ndarray:
    """Finite-difference estimate of d sim / dA at ``layer``; costs 2*H*M*K forwards."""
    q = as_tokens(question, bundle)
    _, trace = ite_forward(patches, q, bundle)
    if not 0 <= layer < len(trace.layers):
        raise IndexError(f"layer {layer} out of range")
    return finite_diff_grads_probe(IteProbe(bundle, patches, q), layer, trace.attn(layer), epsilon)


def gradcam_relevance(bundle, patches, question, layer: int, question_id: str = "") -> RelevanceMap:
    """ITE forward with recording, gradient at ``layer`` (0-based), then the relevance map."""
    _, trace = ite_forward(patches, as_tokens(question, bundle), bundle, record=True)
    grads = grad_wrt_attention(trace, None, layer)
    return compute_relevance(trace, grads, layer, question_id, tuple(bundle.config.patch_grid))


def heatmap_pixels(m: RelevanceMap, scale: int = HEATMAP_SCALE) -> np.ndarray:
    """uint8 image: min-max normalised relevance on the patch grid, nearest-neighbour upsampled."""
    rel = m.rel
    lo, hi = rel.min(), rel.max()
    if hi > lo:
        v = np.rint((rel - lo) / (hi - lo) * 255.0)
    else:
        v = np.full(rel.shape, 128.0)
    img = v.astype(np.uint8).reshape(m.grid)
    return np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)


def export_heatmap(m: RelevanceMap, out_path, scale: int = HEATMAP_SCALE) -> str:
    out_path = os.fspath(out_path)
    write_pgm(out_path, heatmap_pixels(m, scale))
    return out_path
