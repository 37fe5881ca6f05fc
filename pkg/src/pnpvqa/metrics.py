"""Answer normalisation, soft accuracy, exact match and answer hit rate."""
from __future__ import annotations

import re
from typing import Optional, Sequence

_PUNCT = re.compile(r"[^\w\s]")
ARTICLES = ("a", "an", "the")


def normalize_answer(s: str) -> str:
    words = _PUNCT.sub("", s.lower()).split()
    if words and words[0] in ARTICLES:
        words = words[1:]
    return " ".join(words)


def soft_accuracy(prediction: str, answers: Sequence[str]) -> float:
    """min(1, m / 3) with m the number of annotator answers equal to the prediction."""
    if not answers:
        raise ValueError("answers must be non-empty")
    p = normalize_answer(prediction)
    m = sum(normalize_answer(a) == p for a in answers)
    return min(1.0, m / 3.0)


def exact_match(prediction: str, answers: Sequence[str]) -> int:
    p = normalize_answer(prediction)
    return int(any(normalize_answer(a) == p for a in answers))


def is_yes_no(answers: Sequence[str]) -> bool:
    return any(normalize_answer(a) in ("yes", "no") for a in answers)


def answer_hit(captions: Sequence[str], answers: Sequence[str], word_boundary: bool = False) -> bool:
    """Whether some caption contains some ground-truth answer verbatim (after normalisation)."""
    caps = [normalize_answer(c) for c in captions]
    for a in {normalize_answer(a) for a in answers}:
        if not a:
            continue
        if word_boundary:
            pat = re.compile(r"(?<!\w)" + re.escape(a) + r"(?!\w)")
            if any(pat.search(c) for c in caps):
                return True
        elif any(a in c for c in caps):
            return True
    return False


def answer_hit_rate(answer_lists: Sequence[Sequence[str]], caption_lists: Sequence[Sequence[str]],
                    word_boundary: bool = False) -> tuple[Optional[float], int]:
    """(hits / applicable questions, number excluded as yes/no); ratio is None if nothing applies."""
    if len(answer_lists) != len(caption_lists):
        raise ValueError("records and caption sets are not aligned")
    hits = excluded = 0
    for answers, caps in zip(answer_lists, caption_lists):
        if is_yes_no(answers):
            excluded += 1
        elif answer_hit(caps, answers, word_boundary):
            hits += 1
    applicable = len(answer_lists) - excluded
    return (hits / applicable if applicable else None), excluded
