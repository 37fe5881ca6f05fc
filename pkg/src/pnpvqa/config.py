"""Run configuration and asset loading.

Paths in a config file are kept as written.  A leading ``@toy/`` points
into the bundled toy fixture; anything else relative resolves against the
directory of the config file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .captioning import DecodeConfig
from .dataset import QuestionRecord, ingest_dataset
from .models.bundle import ModelBundle, load_bundle
from .models.config import ArchConfig
from .models.tokenizer import Vocab
from .relevance import default_gradcam_layer
from .sampling import Strategy

TOY_PREFIX = "@toy/"


def toy_dir() -> Path:
    return Path(str(resources.files("pnpvqa") / "data" / "toy"))


@dataclass(frozen=True)
class PipelineConfig:
    n_captions: int = 100
    k_prime: int = 20
    gradcam_layer: Optional[int] = None        # 1-based; None -> 8th layer or the last
    patch_strategy: str = "question_guided"
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    fusion: str = "fid"
    group_size: int = 1
    max_enc_len: int = 256
    seed: int = 0
    caption_source: str = "generated"          # or "human"
    ahr_word_boundary: bool = False
    bundle: str = "@toy/toy.pnpw"
    arch: str = "@toy/arch.json"
    vocab: str = "@toy/vocab.json"
    dataset: str = "@toy/dataset.jsonl"
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "patch_strategy", Strategy.parse(self.patch_strategy).value)
        if isinstance(self.decode, dict):
            object.__setattr__(self, "decode", DecodeConfig(**self.decode))
        if self.n_captions < 0:
            raise ValueError("n_captions must be >= 0")
        if self.k_prime < 1:
            raise ValueError("k_prime must be >= 1")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.fusion not in ("fie", "fid"):
            raise ValueError(f"fusion must be 'fie' or 'fid', got {self.fusion!r}")
        if self.caption_source not in ("generated", "human"):
            raise ValueError(f"caption_source must be 'generated' or 'human'")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def resolve_path(self, p: str) -> Path:
        if p.startswith(TOY_PREFIX):
            return toy_dir() / p[len(TOY_PREFIX):]
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def with_layer_resolved(self, arch: ArchConfig) -> "PipelineConfig":
        if self.gradcam_layer is not None:
            return self
        return replace(self, gradcam_layer=default_gradcam_layer(arch.ite_layers))

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def updated(self, **kw) -> "PipelineConfig":
        return replace(self, **kw)


def config_from_dict(d: dict, base_dir=".") -> PipelineConfig:
    """Accepts a plain config object or a report carrying one under ``config``."""
    if "config" in d and isinstance(d["config"], dict):
        d = d["config"]
    d = dict(d)
    known = set(PipelineConfig.__dataclass_fields__) - {"base_dir"}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    if "decode" in d:
        d["decode"] = DecodeConfig(**d["decode"])
    return PipelineConfig(**d, base_dir=str(base_dir))


def load_config(path=None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    return config_from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


@dataclass(frozen=True)
class Assets:
    bundle: ModelBundle
    records: tuple[QuestionRecord, ...]


def load_assets(cfg: PipelineConfig) -> Assets:
    arch = ArchConfig.load(cfg.resolve_path(cfg.arch))
    vocab = Vocab.load(cfg.resolve_path(cfg.vocab))
    bundle = load_bundle(cfg.resolve_path(cfg.bundle).read_bytes(), arch, vocab)
    records = ingest_dataset(cfg.resolve_path(cfg.dataset))
    return Assets(bundle, tuple(records))
