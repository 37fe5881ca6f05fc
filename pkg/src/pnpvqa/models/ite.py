"""Image-grounded text encoder with a scalar image-text similarity head.

The forward pass runs on the autodiff tape so the similarity can be
differentiated with respect to every layer's cross-attention maps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .. import tensor as T
from ..attention import AttentionTrace, CrossAttentionParams, cross_attention_forward, merge_traces
from .decoders import OverlongInputError
from .tokenizer import TokenSeq
from .vision import PatchFeatures


def _ln(x, w, prefix):
    return T.vlayer_norm(x, w[f"{prefix}_g"], w[f"{prefix}_b"])


def _self_attn(x, w, prefix, heads):
    d = x.shape[1]
    dh = d // heads
    q, k, v = (x @ w[f"{prefix}_w{n}"] for n in "qkv")
    outs = []
    for h in range(heads):
        qh, kh, vh = (T.cols(t, h * dh, (h + 1) * dh) for t in (q, k, v))
        a = T.softmax(T.scale(qh @ kh.T, 1.0 / np.sqrt(dh)))
        outs.append(a @ vh)
    return T.concat_cols(outs) @ w[f"{prefix}_wo"]


def _ffn(x, w, prefix):
    h = T.vgelu(x @ w[f"{prefix}_w1"] + w[f"{prefix}_b1"])
    return h @ w[f"{prefix}_w2"] + w[f"{prefix}_b2"]


def cross_params(w, prefix) -> CrossAttentionParams:
    return CrossAttentionParams(w[f"{prefix}_wq"], w[f"{prefix}_wk"], w[f"{prefix}_wv"], w[f"{prefix}_wo"])


def as_tokens(question, bundle) -> TokenSeq:
    if isinstance(question, TokenSeq):
        return question
    if bundle.vocab is None:
        raise ValueError("bundle has no vocab; pass a TokenSeq")
    return bundle.vocab.tokenize(question, frame=True)


def ite_forward(patches: PatchFeatures, question: TokenSeq, bundle, record: bool = False,
                overrides: Optional[Mapping[int, np.ndarray]] = None):
    """Returns the similarity node and the attention trace."""
    cfg = bundle.config
    w = bundle.tensors
    ids = np.asarray(question.ids, dtype=np.int64)
    if len(ids) > cfg.max_enc_len:
        raise OverlongInputError(f"question has {len(ids)} tokens, max_enc_len is {cfg.max_enc_len}")
    if len(ids) == 0:
        raise ValueError("empty token sequence")
    overrides = dict(overrides or {})
    bad = [l for l in overrides if not 0 <= l < cfg.ite_layers]
    if bad:
        raise IndexError(f"override layer(s) {bad} out of range")
    x = T.Var(patches.features)
    y = _ln(T.Var(w["ite.tok"][ids] + w["ite.pos"][: len(ids)]), w, "ite.ln0")
    traces = []
    for l in range(cfg.ite_layers):
        p = f"ite.{l}"
        y = _ln(y + _self_attn(y, w, f"{p}.sa", cfg.heads), w, f"{p}.ln1")
        ca, tr = cross_attention_forward(y, x, cross_params(w, f"{p}.ca"), record=record,
                                         a_override=overrides.get(l))
        traces.append(tr)
        y = _ln(y + ca, w, f"{p}.ln2")
        y = _ln(y + _ffn(y, w, f"{p}.ff"), w, f"{p}.ln3")
    score = T.vsum(T.row(y, 0) * w["ite.sim_w"]) + T.Var(w["ite.sim_b"][0])
    return score, merge_traces(traces, score if record else None, record)


def ite_similarity(patches: PatchFeatures, question: Union[TokenSeq, str], bundle,
                   record: bool = False) -> tuple[float, AttentionTrace]:
    score, trace = ite_forward(patches, as_tokens(question, bundle), bundle, record=record)
    return float(score.value), trace


@dataclass(frozen=True)
class IteProbe:
    """Callable ``overrides -> similarity node`` for one (image, question) pair."""

    bundle: object
    patches: PatchFeatures
    question: TokenSeq

    def __call__(self, overrides: Mapping[int, np.ndarray]) -> T.Var:
        return ite_forward(self.patches, self.question, self.bundle, overrides=overrides)[0]

    @classmethod
    def make(cls, bundle, patches, question) -> "IteProbe":
        return cls(bundle, patches, as_tokens(question, bundle))
