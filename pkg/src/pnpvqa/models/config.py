from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class ArchConfig:
    """Sizes of the toy networks.

    ``patch_res`` is the side length each image patch is area-pooled to
    before the patch embedding; ``max_dec_len`` bounds the decoders'
    position tables.
    """

    d_v: int = 24
    d_t: int = 32
    heads: int = 4
    ite_layers: int = 2
    dec_layers: int = 2
    qa_enc_layers: int = 2
    qa_dec_layers: int = 2
    vocab_size: int = 128
    max_enc_len: int = 256
    patch_grid: tuple[int, int] = (4, 4)
    patch_res: int = 4
    d_ff: int = 64
    max_dec_len: int = 32

    def __post_init__(self):
        object.__setattr__(self, "patch_grid", tuple(int(v) for v in self.patch_grid))
        dims = [self.d_v, self.d_t, self.heads, self.vocab_size, self.max_enc_len,
                self.patch_res, self.d_ff, self.max_dec_len, *self.patch_grid]
        if any(int(d) < 1 for d in dims):
            raise ValueError("all dims must be positive")
        if self.d_t % self.heads:
            raise ValueError(f"d_t={self.d_t} not divisible by heads={self.heads}")
        if self.d_v % self.heads:
            raise ValueError(f"d_v={self.d_v} not divisible by heads={self.heads}")
        if self.ite_layers < 1:
            raise ValueError("ite_layers must be >= 1")
        if min(self.dec_layers, self.qa_enc_layers, self.qa_dec_layers) < 0:
            raise ValueError("layer counts must be non-negative")

    @property
    def n_patches(self) -> int:
        return self.patch_grid[0] * self.patch_grid[1]

    @property
    def d_head(self) -> int:
        return self.d_t // self.heads

    def to_json(self) -> str:
        d = asdict(self)
        d["patch_grid"] = list(self.patch_grid)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown ArchConfig keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ArchConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
