from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tensor import as_tensor
from .layers import ffn, ln, mha


class ImageShapeError(ValueError):
    pass


@dataclass(frozen=True)
class PatchFeatures:
    features: np.ndarray                     # (K, d_v)
    patch_index_map: tuple                   # row -> (grid_row, grid_col)
    grid: tuple[int, int]

    def __post_init__(self):
        rows, cols = self.grid
        if self.features.shape[0] != rows * cols:
            raise ValueError("feature rows must equal grid size")
        if sorted(self.patch_index_map) != [(r, c) for r in range(rows) for c in range(cols)]:
            raise ValueError("patch_index_map must cover the grid exactly once")

    @property
    def k(self) -> int:
        return self.features.shape[0]


def split_patches(image: np.ndarray, grid, patch_res: int) -> np.ndarray:
    """Cut an (H, W, 3) image into grid cells, area-pool each to patch_res^2, flatten row-major."""
    image = as_tensor(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ImageShapeError(f"expected (H, W, 3) image, got {image.shape}")
    rows, cols = grid
    H, W, _ = image.shape
    if H % rows or W % cols:
        raise ImageShapeError(f"image {H}x{W} not divisible by patch grid {rows}x{cols}")
    ph, pw = H // rows, W // cols
    if ph % patch_res or pw % patch_res:
        raise ImageShapeError(f"patch {ph}x{pw} not divisible by pooling size {patch_res}")
    sh, sw = ph // patch_res, pw // patch_res
    x = image.reshape(rows, patch_res, sh, cols, patch_res, sw, 3).mean(axis=(2, 5))
    x = x.transpose(0, 2, 1, 3, 4)  # (rows, cols, patch_res, patch_res, 3)
    return x.reshape(rows * cols, patch_res * patch_res * 3)


def vision_encode(image, bundle) -> PatchFeatures:
    cfg = bundle.config
    w = bundle.tensors
    p = split_patches(image, cfg.patch_grid, cfg.patch_res)
    x = p @ w["vision.patch_w"] + w["vision.patch_b"] + w["vision.pos"]
    x = ln(x + mha(x, w, "vision.sa", cfg.heads), w, "vision.ln1")
    x = ln(x + ffn(x, w, "vision.ff"), w, "vision.ln2")
    x = ln(x, w, "vision.lnf")
    rows, cols = cfg.patch_grid
    index_map = tuple((r, c) for r in range(rows) for c in range(cols))
    x.flags.writeable = False
    return PatchFeatures(x, index_map, (rows, cols))
