"""Answer generation from a question and captions, fused in the encoder or the decoder.

Fusion-in-encoder renders the question and every caption as one encoder
input, so it stops working once that input outgrows the position table.
Fusion-in-decoder encodes each (question, caption group) on its own and
concatenates the encoded token rows into the decoder's cross-attention
context, which has no length cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .captioning import CaptionSet
from .models.decoders import OverlongInputError, qa_decode_step, qa_encode
from .models.layers import PairCounter
from .models.tokenizer import BOS, EOS, PAD, UNK, TokenSeq

FUSIONS = ("fie", "fid")
MAX_ANSWER_LEN = 4


@dataclass(frozen=True)
class FusionConfig:
    fusion: str = "fid"
    group_size: int = 1
    max_enc_len: int = 256
    max_answer_len: int = MAX_ANSWER_LEN

    def __post_init__(self):
        if self.fusion not in FUSIONS:
            raise ValueError(f"fusion must be one of {FUSIONS}, got {self.fusion!r}")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.max_enc_len < 1 or self.max_answer_len < 1:
            raise ValueError("lengths must be positive")


@dataclass(frozen=True)
class QAContextGroup:
    question: str
    captions: tuple[str, ...]
    rendered: TokenSeq


@dataclass(frozen=True)
class AnswerPrediction:
    text: str
    fusion: str
    group_size: int
    n_captions_used: int
    n_groups: int = 1
    encoder_pairs: int = 0          # self-attention query-key pairs scored by the encoder
    logits: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


def render(question: str, captions: Sequence[str]) -> str:
    return " ".join(["question:", question, "context:", *captions])


def render_group(question: str, captions: Sequence[str], vocab, max_enc_len: int) -> QAContextGroup:
    toks = vocab.tokenize(render(question, captions), frame=True)
    if len(toks) > max_enc_len:
        raise OverlongInputError(
            f"rendered group of {len(captions)} caption(s) has {len(toks)} tokens, limit {max_enc_len}")
    return QAContextGroup(question, tuple(captions), toks)


def _texts(caption_set) -> list[str]:
    return caption_set.texts if isinstance(caption_set, CaptionSet) else list(caption_set)


def build_groups(question: str, caption_set, group_size: int, vocab,
                 max_enc_len: int = 256) -> list[QAContextGroup]:
    """Partition captions in kept order into groups of ``group_size`` (last may be short)."""
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    texts = _texts(caption_set)
    if not texts:
        return [render_group(question, [], vocab, max_enc_len)]
    return [render_group(question, texts[i:i + group_size], vocab, max_enc_len)
            for i in range(0, len(texts), group_size)]


def greedy_decode(context: np.ndarray, bundle, max_len: int = MAX_ANSWER_LEN):
    """Greedy answer ids and the per-step logits."""
    ids = [BOS]
    steps = []
    for _ in range(max_len):
        logits = qa_decode_step(ids, context, bundle)
        steps.append(logits)
        masked = logits.copy()
        masked[[BOS, PAD, UNK]] = -np.inf
        tok = int(np.argmax(masked))
        if tok == EOS:
            break
        ids.append(tok)
    return ids[1:], np.stack(steps)


def _encode_all(groups, bundle, max_enc_len):
    counter = PairCounter()
    reps = [qa_encode(g.rendered, bundle, max_enc_len, counter) for g in groups]
    return np.concatenate(reps, axis=0), counter.pairs


def fuse_in_decoder(groups: Sequence[QAContextGroup], bundle, max_enc_len: int = 256,
                    max_answer_len: int = MAX_ANSWER_LEN, group_size: Optional[int] = None) -> AnswerPrediction:
    if not groups:
        raise ValueError("no groups to encode")
    context, pairs = _encode_all(groups, bundle, max_enc_len)
    ids, logits = greedy_decode(context, bundle, max_answer_len)
    n_caps = sum(len(g.captions) for g in groups)
    if group_size is None:
        group_size = max(len(g.captions) for g in groups) or 1
    return AnswerPrediction(bundle.vocab.detokenize(ids), "fid", group_size, n_caps,
                            len(groups), pairs, logits)


def fuse_in_encoder(question: str, caption_set, bundle, max_enc_len: int = 256,
                    max_answer_len: int = MAX_ANSWER_LEN) -> AnswerPrediction:
    texts = _texts(caption_set)
    group = render_group(question, texts, bundle.vocab, max_enc_len)
    context, pairs = _encode_all([group], bundle, max_enc_len)
    ids, logits = greedy_decode(context, bundle, max_answer_len)
    return AnswerPrediction(bundle.vocab.detokenize(ids), "fie", max(len(texts), 1), len(texts),
                            1, pairs, logits)


def answer(question: str, caption_set, fusion_cfg: FusionConfig, bundle) -> AnswerPrediction:
    if fusion_cfg.fusion == "fie":
        return fuse_in_encoder(question, caption_set, bundle, fusion_cfg.max_enc_len,
                               fusion_cfg.max_answer_len)
    groups = build_groups(question, caption_set, fusion_cfg.group_size, bundle.vocab,
                          fusion_cfg.max_enc_len)
    return fuse_in_decoder(groups, bundle, fusion_cfg.max_enc_len, fusion_cfg.max_answer_len,
                           fusion_cfg.group_size)


def n_groups(n_captions: int, group_size: int) -> int:
    return max(1, math.ceil(n_captions / group_size))
