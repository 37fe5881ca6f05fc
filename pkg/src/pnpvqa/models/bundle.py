from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .config import ArchConfig
from .container import ContainerError, dump_tensors, parse_tensors
from .tokenizer import EOS, Vocab


class ManifestError(ValueError):
    pass


def _ln(prefix, d):
    return {f"{prefix}_g": (d,), f"{prefix}_b": (d,)}


def _self_attn(prefix, d):
    return {f"{prefix}_w{n}": (d, d) for n in "qkvo"}


def _ffn(prefix, d, d_ff):
    return {f"{prefix}_w1": (d, d_ff), f"{prefix}_b1": (d_ff,),
            f"{prefix}_w2": (d_ff, d), f"{prefix}_b2": (d,)}


def _patch_cross_attn(prefix, cfg):
    H, d_t, d_v = cfg.heads, cfg.d_t, cfg.d_v
    return {f"{prefix}_wq": (H, d_t, d_t), f"{prefix}_wk": (H, d_v, d_t),
            f"{prefix}_wv": (H, d_v, cfg.d_head), f"{prefix}_wo": (d_t, d_t)}


def manifest(cfg: ArchConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor name the networks read, with its exact shape, in container order."""
    K, V, d_v, d_t, d_ff = cfg.n_patches, cfg.vocab_size, cfg.d_v, cfg.d_t, cfg.d_ff
    pdim = 3 * cfg.patch_res * cfg.patch_res
    m: dict[str, tuple[int, ...]] = {
        "vision.patch_w": (pdim, d_v), "vision.patch_b": (d_v,), "vision.pos": (K, d_v),
        **_self_attn("vision.sa", d_v), **_ln("vision.ln1", d_v),
        **_ffn("vision.ff", d_v, d_ff), **_ln("vision.ln2", d_v), **_ln("vision.lnf", d_v),
    }
    m.update({"ite.tok": (V, d_t), "ite.pos": (cfg.max_enc_len, d_t), **_ln("ite.ln0", d_t)})
    for l in range(cfg.ite_layers):
        p = f"ite.{l}"
        m.update({**_self_attn(f"{p}.sa", d_t), **_ln(f"{p}.ln1", d_t),
                  **_patch_cross_attn(f"{p}.ca", cfg), **_ln(f"{p}.ln2", d_t),
                  **_ffn(f"{p}.ff", d_t, d_ff), **_ln(f"{p}.ln3", d_t)})
    m.update({"ite.sim_w": (d_t,), "ite.sim_b": (1,)})
    m.update({"cap.tok": (V, d_t), "cap.pos": (cfg.max_dec_len, d_t),
              "cap.patch_pos": (K, d_v), **_ln("cap.ln0", d_t)})
    for l in range(cfg.dec_layers):
        p = f"cap.{l}"
        m.update({**_self_attn(f"{p}.sa", d_t), **_ln(f"{p}.ln1", d_t),
                  **_patch_cross_attn(f"{p}.ca", cfg), **_ln(f"{p}.ln2", d_t),
                  **_ffn(f"{p}.ff", d_t, d_ff), **_ln(f"{p}.ln3", d_t)})
    m.update({"cap.out_w": (d_t, V), "cap.out_b": (V,)})
    m.update({"qa.tok": (V, d_t), "qa.enc_pos": (cfg.max_enc_len, d_t), **_ln("qa.enc_ln0", d_t)})
    for l in range(cfg.qa_enc_layers):
        p = f"qa.enc.{l}"
        m.update({**_self_attn(f"{p}.sa", d_t), **_ln(f"{p}.ln1", d_t),
                  **_ffn(f"{p}.ff", d_t, d_ff), **_ln(f"{p}.ln2", d_t)})
    m.update({"qa.dec_pos": (cfg.max_dec_len, d_t), **_ln("qa.dec_ln0", d_t)})
    for l in range(cfg.qa_dec_layers):
        p = f"qa.dec.{l}"
        m.update({**_self_attn(f"{p}.sa", d_t), **_ln(f"{p}.ln1", d_t),
                  **_self_attn(f"{p}.ca", d_t), **_ln(f"{p}.ln2", d_t),
                  **_ffn(f"{p}.ff", d_t, d_ff), **_ln(f"{p}.ln3", d_t)})
    m.update({"qa.out_w": (d_t, V), "qa.out_b": (V,)})
    return m


@dataclass(frozen=True)
class ModelBundle:
    config: ArchConfig
    tensors: Mapping[str, np.ndarray]
    vocab: Optional[Vocab] = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def to_bytes(self) -> bytes:
        return dump_tensors({n: self.tensors[n] for n in manifest(self.config)})

    def replace(self, **updates) -> "ModelBundle":
        """Copy with some tensors swapped out (shapes re-validated)."""
        t = dict(self.tensors)
        t.update(updates)
        return from_tensors(t, self.config, self.vocab)

    def with_module(self, other: "ModelBundle", prefix: str) -> "ModelBundle":
        """Copy whose ``prefix``.* tensors come from ``other``; e.g. swap the QA network."""
        return self.replace(**{n: a for n, a in other.tensors.items() if n.startswith(prefix + ".")})


def from_tensors(tensors: Mapping[str, np.ndarray], config: ArchConfig,
                 vocab: Optional[Vocab] = None) -> ModelBundle:
    want = manifest(config)
    for name, shape in want.items():
        if name not in tensors:
            raise ManifestError(f"missing tensor {name!r}")
        got = tuple(np.shape(tensors[name]))
        if got != shape:
            raise ManifestError(f"tensor {name!r}: expected dims {list(shape)}, got {list(got)}")
    extra = set(tensors) - set(want)
    if extra:
        raise ManifestError(f"unexpected tensors: {sorted(extra)}")
    if vocab is not None and len(vocab) != config.vocab_size:
        raise ManifestError(f"vocab has {len(vocab)} entries, config says {config.vocab_size}")
    frozen = {}
    for name in want:
        a = np.array(tensors[name], dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ManifestError(f"tensor {name!r} has non-finite values")
        a.flags.writeable = False
        frozen[name] = a
    return ModelBundle(config, MappingProxyType(frozen), vocab)


def load_bundle(container_bytes: bytes, config: ArchConfig, vocab: Optional[Vocab] = None) -> ModelBundle:
    return from_tensors(parse_tensors(container_bytes), config, vocab)


def make_toy_bundle(config: ArchConfig, seed: int = 0, vocab: Optional[Vocab] = None) -> ModelBundle:
    """Seeded random weights: scaled normal matrices, unit LayerNorm gains, small biases."""
    rng = np.random.default_rng(seed)
    t = {}
    for name, shape in manifest(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_g") and "ln" in leaf:
            t[name] = np.ones(shape)
        elif leaf.endswith("_b") and "ln" in leaf:
            t[name] = np.zeros(shape)
        elif leaf in ("tok", "pos", "patch_pos", "enc_pos", "dec_pos"):
            t[name] = rng.normal(0.0, 0.5, shape)
        elif len(shape) == 1:
            t[name] = rng.normal(0.0, 0.02, shape)
        else:
            fan_in = shape[-2]
            t[name] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), shape)
    # captions and answers should terminate within a handful of tokens
    for head in ("cap.out_b", "qa.out_b"):
        b = t[head].copy()
        b[EOS] += 2.0 if head == "cap.out_b" else 1.0
        t[head] = b
    return from_tensors(t, config, vocab)


__all__ = ["ContainerError", "ManifestError", "ModelBundle", "from_tensors",
           "load_bundle", "make_toy_bundle", "manifest"]
