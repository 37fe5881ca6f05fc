"""Stochastic caption generation over sampled patch subsets."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .models.decoders import caption_decoder_step
from .models.tokenizer import BOS, EOS, PAD, UNK, normalize_text
from .models.vision import PatchFeatures
from .relevance import RelevanceMap
from .rng import RngStream
from .sampling import PatchSubset, Strategy, sample_patches
from .tensor import softmax_rows

METHODS = ("top_k", "nucleus", "temperature", "beam")
_ALIASES = {"topk": "top_k", "top-k": "top_k", "temp": "temperature", "beam_search": "beam"}
_BLOCKED = [BOS, PAD, UNK]
_BLOCK_LOGIT = -1e9


class DecodeConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeConfig:
    method: str = "top_k"
    k: int = 50
    p: float = 0.9
    temp: float = 1.0
    beam_width: int = 3
    max_caption_len: int = 20     # prompt + generated tokens, BOS excluded
    prompt: str = "a picture of "

    def __post_init__(self):
        m = _ALIASES.get(self.method, self.method)
        object.__setattr__(self, "method", m)
        if m not in METHODS:
            raise DecodeConfigError(f"unknown decoding method {self.method!r}")
        if m == "top_k" and self.k < 1:
            raise DecodeConfigError("top-k needs k >= 1")
        if m == "nucleus" and not 0.0 < self.p <= 1.0:
            raise DecodeConfigError("nucleus needs p in (0, 1]")
        if m == "temperature" and not self.temp > 0:
            raise DecodeConfigError("temperature must be > 0")
        if m == "beam" and self.beam_width < 1:
            raise DecodeConfigError("beam width must be >= 1")
        if self.max_caption_len < 0:
            raise DecodeConfigError("max_caption_len must be >= 0")

    @property
    def label(self) -> str:
        """Row label in the decoding ablation table."""
        return {
            "beam": "Beam search",
            "temperature": f"Temperature (t={self.temp:g})",
            "nucleus": f"Nucleus (p={self.p:g})",
            "top_k": f"Top-k (k={self.k})",
        }[self.method]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def parse(cls, text: str, **defaults) -> "DecodeConfig":
        """``"topk"``, ``"topk:100"``, ``"nucleus:0.95"``, ``"temp:0.5"`` or ``"beam"``."""
        name, _, arg = text.partition(":")
        method = _ALIASES.get(name, name)
        kw = dict(defaults)
        kw["method"] = method
        if arg:
            key = {"top_k": "k", "nucleus": "p", "temperature": "temp", "beam": "beam_width"}.get(method)
            if key is None:
                raise DecodeConfigError(f"unknown decoding method {name!r}")
            kw[key] = int(arg) if key in ("k", "beam_width") else float(arg)
        return cls(**kw)


def decode_distribution(logits, cfg: DecodeConfig) -> np.ndarray:
    """The full-vocabulary distribution a stochastic method samples from."""
    logits = np.asarray(logits, dtype=np.float64)
    V = logits.size
    probs = np.zeros(V)
    if cfg.method == "top_k":
        keep = np.argsort(-logits, kind="stable")[: min(cfg.k, V)]
        probs[keep] = softmax_rows(logits[keep])
    elif cfg.method == "nucleus":
        full = softmax_rows(logits)
        order = np.argsort(-full, kind="stable")
        cum = np.cumsum(full[order])
        n = min(int(np.searchsorted(cum, cfg.p, side="left")) + 1, V)
        keep = order[:n]
        probs[keep] = full[keep] / full[keep].sum()
    elif cfg.method == "temperature":
        probs = softmax_rows(logits / cfg.temp)
    else:
        raise DecodeConfigError("beam search is not sampled token by token")
    return probs


def decode_next(logits, cfg: DecodeConfig, stream: RngStream) -> int:
    probs = decode_distribution(logits, cfg)
    cum = np.cumsum(probs)
    i = int(np.searchsorted(cum, stream.uniform() * cum[-1], side="right"))
    if i >= probs.size:
        i = int(np.flatnonzero(probs)[-1])
    return i


def _masked(logits: np.ndarray) -> np.ndarray:
    out = np.array(logits, dtype=np.float64)
    out[_BLOCKED] = _BLOCK_LOGIT
    return out


def _prompt_ids(cfg: DecodeConfig, bundle) -> list[int]:
    return list(bundle.vocab.tokenize(cfg.prompt).ids)


def _check_len(cfg: DecodeConfig, bundle):
    if cfg.max_caption_len + 1 > bundle.config.max_dec_len:
        raise DecodeConfigError(
            f"max_caption_len {cfg.max_caption_len} exceeds decoder positions {bundle.config.max_dec_len - 1}")


def _sample_ids(patches, subset, cfg, bundle, stream) -> list[int]:
    ids = [BOS] + _prompt_ids(cfg, bundle)
    start = len(ids)
    step = 0
    while len(ids) - 1 < cfg.max_caption_len:
        logits = _masked(caption_decoder_step(ids, patches, subset, bundle))
        tok = decode_next(logits, cfg, stream.child(step))
        step += 1
        if tok == EOS:
            break
        ids.append(tok)
    return ids[start:]


def _log_softmax(x):
    z = x - x.max()
    return z - np.log(np.exp(z).sum())


def _beam_ids(patches, subset, cfg, bundle) -> list[int]:
    prompt = [BOS] + _prompt_ids(cfg, bundle)
    start = len(prompt)
    W = cfg.beam_width
    live = [(0.0, tuple(prompt))]
    done = []   # (score_sum, n_generated, body)
    while live and len(done) < W:
        if len(live[0][1]) - 1 >= cfg.max_caption_len:
            done.extend((s, len(ids) - start, ids[start:]) for s, ids in live)
            break
        cands = []
        for s, ids in live:
            lp = _log_softmax(_masked(caption_decoder_step(ids, patches, subset, bundle)))
            for tok in np.argsort(-lp, kind="stable")[:W]:
                cands.append((s + lp[tok], ids + (int(tok),)))
        cands.sort(key=lambda c: (-c[0], c[1]))
        live = []
        for s, ids in cands[:W]:
            if ids[-1] == EOS:
                done.append((s, len(ids) - start, ids[start:-1]))
            else:
                live.append((s, ids))
    best = min(done, key=lambda d: (-d[0] / max(d[1], 1), d[2]))
    return list(best[2])


def generate_caption(patches: PatchFeatures, subset, cfg: DecodeConfig, bundle,
                     stream: Optional[RngStream] = None) -> str:
    """Caption body (prompt excluded) for one patch subset."""
    if isinstance(subset, PatchSubset):
        subset = subset.indices
    if len(subset) == 0:
        raise ValueError("patch subset is empty")
    _check_len(cfg, bundle)
    if cfg.method == "beam":
        ids = _beam_ids(patches, subset, cfg, bundle)
    else:
        if stream is None:
            raise ValueError("stochastic decoding needs a stream")
        ids = _sample_ids(patches, subset, cfg, bundle, stream)
    return bundle.vocab.detokenize(ids)


def dedup_keep_mask(texts: Sequence[str]) -> list[bool]:
    kept: list[str] = []
    mask = []
    for t in texts:
        n = normalize_text(t)
        keep = not any(n in k for k in kept)
        mask.append(keep)
        if keep:
            kept.append(n)
    return mask


def dedup_filter(texts: Sequence[str]) -> list[str]:
    """Drop every caption that is an exact substring of an earlier kept caption."""
    return [t for t, keep in zip(texts, dedup_keep_mask(texts)) if keep]


@dataclass(frozen=True)
class Caption:
    text: str
    subset: tuple[int, ...]
    rng_path: tuple[int, ...]


@dataclass(frozen=True)
class CaptionSet:
    captions: tuple[Caption, ...]
    n_requested: int

    @property
    def n_kept(self) -> int:
        return len(self.captions)

    @property
    def texts(self) -> list[str]:
        return [c.text for c in self.captions]

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> "CaptionSet":
        """Wrap externally supplied captions (no dedup, no patch provenance)."""
        return cls(tuple(Caption(t, (), ()) for t in texts), len(texts))


def generate_caption_set(rel_map: RelevanceMap, patches: PatchFeatures, n: int, k_prime: int,
                         strategy, cfg: DecodeConfig, bundle, root_stream: RngStream) -> CaptionSet:
    """``n`` captions; caption i uses stream ``root/i/0`` for its patch subset and
    ``root/i/1`` for decoding, then the set is deduplicated in generation order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    strategy = Strategy.parse(strategy)
    raw = []
    for i in range(n):
        sub = sample_patches(rel_map, k_prime, strategy, root_stream.child(i, 0))
        dec = root_stream.child(i, 1)
        raw.append(Caption(generate_caption(patches, sub, cfg, bundle, dec), sub.indices, dec.path))
    mask = dedup_keep_mask([c.text for c in raw])
    return CaptionSet(tuple(c for c, keep in zip(raw, mask) if keep), n)
