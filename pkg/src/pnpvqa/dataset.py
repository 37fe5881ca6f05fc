from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    image: Path
    question: str
    answers: tuple[str, ...]
    human_captions: Optional[tuple[str, ...]] = None


def ingest_dataset(path) -> list[QuestionRecord]:
    """JSON-lines questions; ``image`` paths resolve against the dataset file's directory."""
    path = Path(path)
    base = path.parent
    records: list[QuestionRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            for key in ("id", "image", "question", "answers"):
                if key not in obj:
                    raise DatasetError(f"{path}:{lineno}: missing {key!r}")
            answers = obj["answers"]
            if not isinstance(answers, list) or not answers or not all(isinstance(a, str) for a in answers):
                raise DatasetError(f"{path}:{lineno}: 'answers' must be a non-empty list of strings")
            qid = str(obj["id"])
            if qid in seen:
                raise DatasetError(f"{path}:{lineno}: duplicate id {qid!r}")
            seen.add(qid)
            hc = obj.get("human_captions")
            if hc is not None and (not isinstance(hc, list) or not all(isinstance(c, str) for c in hc)):
                raise DatasetError(f"{path}:{lineno}: 'human_captions' must be a list of strings")
            records.append(QuestionRecord(qid, base / obj["image"], str(obj["question"]),
                                          tuple(answers), tuple(hc) if hc is not None else None))
    return records
