"""Toy-scale stand-ins for the pretrained networks, plus their weight and vocab files."""
from .bundle import ManifestError, ModelBundle, from_tensors, load_bundle, make_toy_bundle, manifest
from .config import ArchConfig
from .container import ContainerError, dump_tensors, parse_tensors
from .decoders import (DecoderStateError, OverlongInputError, caption_decoder_step,
                       qa_decode_step, qa_encode)
from .ite import IteProbe, ite_forward, ite_similarity
from .layers import PairCounter
from .tokenizer import BOS, EOS, PAD, UNK, TokenSeq, Vocab, normalize_text
from .vision import ImageShapeError, PatchFeatures, split_patches, vision_encode

__all__ = [
    "ArchConfig", "BOS", "ContainerError", "DecoderStateError", "EOS", "ImageShapeError",
    "IteProbe", "ManifestError", "ModelBundle", "OverlongInputError", "PAD",
    "PairCounter", "PatchFeatures", "TokenSeq", "UNK", "Vocab", "caption_decoder_step",
    "dump_tensors", "from_tensors", "ite_forward", "ite_similarity", "load_bundle",
    "make_toy_bundle", "manifest", "normalize_text", "parse_tensors", "qa_decode_step",
    "qa_encode", "split_patches", "vision_encode",
]
