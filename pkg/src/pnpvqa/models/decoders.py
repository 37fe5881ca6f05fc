"""Caption decoder and QA encoder-decoder forwards."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .layers import PairCounter, ffn, ln, mha, patch_cross_attn
from .tokenizer import TokenSeq
from .vision import PatchFeatures


class OverlongInputError(ValueError):
    """Encoder input longer than the position table allows."""


class DecoderStateError(ValueError):
    pass


def _check_dec_ids(ids, cfg):
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or len(ids) == 0:
        raise DecoderStateError("decoder state must be a non-empty 1-d id sequence")
    if len(ids) > cfg.max_dec_len:
        raise DecoderStateError(f"decoder state has {len(ids)} tokens, max_dec_len is {cfg.max_dec_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise DecoderStateError("token id out of vocab range")
    return ids


def caption_decoder_step(ids: Sequence[int], patches: PatchFeatures, subset: Sequence[int],
                         bundle) -> np.ndarray:
    """Next-token logits given the ids so far and a subset of patch rows.

    Each selected patch row carries its own position embedding, looked up
    by original grid index, so the rows may be passed in any order.
    """
    cfg = bundle.config
    w = bundle.tensors
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        raise ValueError("patch subset is empty")
    if subset.min() < 0 or subset.max() >= patches.k:
        raise IndexError("patch index out of range")
    ids = _check_dec_ids(ids, cfg)
    x = patches.features[subset] + w["cap.patch_pos"][subset]
    y = ln(w["cap.tok"][ids] + w["cap.pos"][: len(ids)], w, "cap.ln0")
    for l in range(cfg.dec_layers):
        p = f"cap.{l}"
        y = ln(y + mha(y, w, f"{p}.sa", cfg.heads, causal=True), w, f"{p}.ln1")
        y = ln(y + patch_cross_attn(y, x, w, f"{p}.ca"), w, f"{p}.ln2")
        y = ln(y + ffn(y, w, f"{p}.ff"), w, f"{p}.ln3")
    return y[-1] @ w["cap.out_w"] + w["cap.out_b"]


def qa_encode(tokens: TokenSeq, bundle, max_len: Optional[int] = None,
              counter: Optional[PairCounter] = None) -> np.ndarray:
    """Encoder representations (len x d_t) for one rendered input."""
    cfg = bundle.config
    w = bundle.tensors
    cap = cfg.max_enc_len if max_len is None else min(max_len, cfg.max_enc_len)
    ids = np.asarray(tokens.ids, dtype=np.int64)
    if len(ids) > cap:
        raise OverlongInputError(f"input has {len(ids)} tokens, encoder limit is {cap}")
    if len(ids) == 0:
        raise ValueError("empty encoder input")
    h = ln(w["qa.tok"][ids] + w["qa.enc_pos"][: len(ids)], w, "qa.enc_ln0")
    for l in range(cfg.qa_enc_layers):
        p = f"qa.enc.{l}"
        h = ln(h + mha(h, w, f"{p}.sa", cfg.heads, counter=counter), w, f"{p}.ln1")
        h = ln(h + ffn(h, w, f"{p}.ff"), w, f"{p}.ln2")
    h.flags.writeable = False
    return h


def qa_decode_step(ids: Sequence[int], fused_context: np.ndarray, bundle) -> np.ndarray:
    """Next-token logits; the decoder cross-attends over whatever context it is handed."""
    cfg = bundle.config
    w = bundle.tensors
    ids = _check_dec_ids(ids, cfg)
    if fused_context.ndim != 2 or fused_context.shape[1] != cfg.d_t or len(fused_context) == 0:
        raise ValueError(f"fused context must be (n, {cfg.d_t}), got {fused_context.shape}")
    y = ln(w["qa.tok"][ids] + w["qa.dec_pos"][: len(ids)], w, "qa.dec_ln0")
    for l in range(cfg.qa_dec_layers):
        p = f"qa.dec.{l}"
        y = ln(y + mha(y, w, f"{p}.sa", cfg.heads, causal=True), w, f"{p}.ln1")
        y = ln(y + mha(y, w, f"{p}.ca", cfg.heads, kv=fused_context), w, f"{p}.ln2")
        y = ln(y + ffn(y, w, f"{p}.ff"), w, f"{p}.ln3")
    return y[-1] @ w["qa.out_w"] + w["qa.out_b"]
