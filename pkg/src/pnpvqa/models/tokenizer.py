from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

BOS, EOS, PAD, UNK = 0, 1, 2, 3
SPECIALS = ("<bos>", "<eos>", "<pad>", "<unk>")

_PUNCT = re.compile(r"[^\w\s]")


def normalize_text(text: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace."""
    return " ".join(_PUNCT.sub("", text.lower()).split())


@dataclass(frozen=True)
class TokenSeq:
    ids: tuple[int, ...]
    text: str

    def __len__(self):
        return len(self.ids)


class Vocab:
    def __init__(self, tokens):
        tokens = list(tokens)
        if tuple(tokens[:4]) != SPECIALS:
            raise ValueError(f"vocab must start with {SPECIALS}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate vocab entries")
        self.tokens = tuple(tokens)
        self.index = {w: i for i, w in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def load(cls, path) -> "Vocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8"))["tokens"])

    def to_json(self) -> str:
        return json.dumps({"tokens": list(self.tokens)}, indent=1) + "\n"

    def tokenize(self, text: str, frame: bool = False) -> TokenSeq:
        ids = [self.index.get(w, UNK) for w in normalize_text(text).split()]
        if frame:
            ids = [BOS] + ids + [EOS]
        return TokenSeq(tuple(ids), text)

    def detokenize(self, ids) -> str:
        return " ".join(self.tokens[i] for i in ids if i not in (BOS, EOS, PAD))
