"""End-to-end evaluation: per-question pipeline, reports, sweeps and AHR buckets."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .captioning import CaptionSet, DecodeConfig, generate_caption_set
from .config import Assets, PipelineConfig
from .dataset import QuestionRecord
from .fusion import FusionConfig, answer
from .imageio import load_image
from .metrics import answer_hit, exact_match, is_yes_no, soft_accuracy
from .models.vision import vision_encode
from .relevance import RelevanceMap, gradcam_relevance
from .rng import RngStream
from .sampling import Strategy

SWEEP_PARAMS = ("gradcam_layer", "k_prime", "n_captions", "decode_method", "fusion",
                "group_size", "patch_strategy")

STRATEGY_LABELS = {
    "question_guided": "Question-guided patch sampling",
    "uniform": "Uniform random sampling",
    "all": "All patches (generic captions)",
}


class MissingHumanCaptions(ValueError):
    pass


# --------------------------------------------------------------------------
# JSON with fixed float formatting


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite float in report")
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and keys in insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# --------------------------------------------------------------------------
# per-question pipeline


@dataclass
class QuestionResult:
    row: dict
    relevance: Optional[RelevanceMap] = None


def _empty_row(rec: QuestionRecord, cfg: PipelineConfig) -> dict:
    return {
        "id": rec.id,
        "question": rec.question,
        "prediction": None,
        "soft_accuracy": None,
        "exact_match": None,
        "ahr_excluded": is_yes_no(rec.answers),
        "ahr_hit": None,
        "n_captions_requested": cfg.n_captions if cfg.caption_source == "generated"
        else len(rec.human_captions or ()),
        "n_captions_kept": None,
        "n_groups": None,
        "encoder_pairs": None,
        "captions": [],
        "relevance": None,
        "error": None,
    }


def evaluate_question(index: int, rec: QuestionRecord, assets: Assets,
                      cfg: PipelineConfig) -> QuestionResult:
    """Run one question through the pipeline; any failure is recorded in the row."""
    bundle = assets.bundle
    row = _empty_row(rec, cfg)
    rel = None
    try:
        if cfg.caption_source == "human":
            if rec.human_captions is None:
                raise MissingHumanCaptions(f"question {rec.id!r} has no human captions")
            caps = CaptionSet.from_texts(rec.human_captions)
        else:
            img = load_image(rec.image, bundle.config.patch_grid)
            patches = vision_encode(img, bundle)
            n_layers = bundle.config.ite_layers
            if not 1 <= cfg.gradcam_layer <= n_layers:
                raise IndexError(f"gradcam_layer {cfg.gradcam_layer} outside 1..{n_layers}")
            rel = gradcam_relevance(bundle, patches, rec.question, cfg.gradcam_layer - 1, rec.id)
            row["relevance"] = [float(v) for v in rel.rel]
            caps = generate_caption_set(rel, patches, cfg.n_captions, cfg.k_prime, cfg.patch_strategy,
                                        cfg.decode, bundle, RngStream(cfg.seed, (index,)))
        row["captions"] = caps.texts
        row["n_captions_kept"] = caps.n_kept
        if not row["ahr_excluded"]:
            row["ahr_hit"] = answer_hit(caps.texts, rec.answers, cfg.ahr_word_boundary)
        pred = answer(rec.question, caps,
                      FusionConfig(cfg.fusion, cfg.group_size, cfg.max_enc_len), bundle)
        row["prediction"] = pred.text
        row["n_groups"] = pred.n_groups
        row["encoder_pairs"] = pred.encoder_pairs
        row["soft_accuracy"] = soft_accuracy(pred.text, rec.answers)
        row["exact_match"] = exact_match(pred.text, rec.answers)
    except Exception as e:  # noqa: BLE001 - batch semantics, failure goes in the row
        row["error"] = f"{type(e).__name__}: {e}"
    return QuestionResult(row, rel)


# --------------------------------------------------------------------------
# reports


def _mean(xs) -> Optional[float]:
    xs = list(xs)
    return float(sum(xs) / len(xs)) if xs else None


def aggregate(rows: Sequence[dict]) -> dict:
    """Means over the questions that evaluated without error."""
    ok = [r for r in rows if r["error"] is None]
    applicable = [r for r in ok if not r["ahr_excluded"]]
    return {
        "n_questions": len(rows),
        "n_failed": len(rows) - len(ok),
        "soft_accuracy": _mean(r["soft_accuracy"] for r in ok),
        "exact_match": _mean(r["exact_match"] for r in ok),
        "ahr": _mean(int(r["ahr_hit"]) for r in applicable),
        "n_ahr_applicable": len(applicable),
        "n_ahr_excluded": len(ok) - len(applicable),
        "mean_captions_kept": _mean(r["n_captions_kept"] for r in ok),
    }


@dataclass
class EvalReport:
    config: dict
    seed: int
    rows: list
    aggregates: dict
    relevance: list = field(default_factory=list, repr=False)   # RelevanceMap or None per row

    @property
    def failed(self) -> bool:
        return self.aggregates["n_failed"] > 0

    def to_dict(self) -> dict:
        return {"config": self.config, "seed": self.seed, "aggregates": self.aggregates,
                "questions": self.rows}

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


def evaluate(assets: Assets, cfg: PipelineConfig, threads: int = 1,
             records: Optional[Sequence[QuestionRecord]] = None) -> EvalReport:
    """Whole-dataset run.  Randomness is addressed by question position, so the
    thread count cannot change the result."""
    cfg = cfg.with_layer_resolved(assets.bundle.config)
    records = list(assets.records if records is None else records)
    jobs = list(enumerate(records))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda j: evaluate_question(j[0], j[1], assets, cfg), jobs))
    else:
        results = [evaluate_question(i, r, assets, cfg) for i, r in jobs]
    rows = [r.row for r in results]
    return EvalReport(cfg.echo(), cfg.seed, rows, aggregate(rows), [r.relevance for r in results])


def human_caption_arm(assets: Assets, cfg: PipelineConfig, threads: int = 1) -> EvalReport:
    """Answer from the records' human-written captions, skipping relevance and captioning."""
    return evaluate(assets, cfg.updated(caption_source="human"), threads)


# --------------------------------------------------------------------------
# AHR vs accuracy


def ahr_accuracy_buckets(report: EvalReport, n_buckets: int) -> list[dict]:
    """Questions ordered by kept-caption count, cut into ``n_buckets`` contiguous slices."""
    if n_buckets < 1:
        raise ValueError("n_buckets must be >= 1")
    ok = [r for r in report.rows if r["error"] is None]
    ok = sorted(ok, key=lambda r: r["n_captions_kept"])  # stable: ties keep dataset order
    out = []
    for b, chunk in enumerate(np.array_split(np.arange(len(ok)), n_buckets)):
        rows = [ok[i] for i in chunk]
        app = [r for r in rows if not r["ahr_excluded"]]
        out.append({
            "bucket": b,
            "n_questions": len(rows),
            "min_captions_kept": min((r["n_captions_kept"] for r in rows), default=None),
            "max_captions_kept": max((r["n_captions_kept"] for r in rows), default=None),
            "n_ahr_applicable": len(app),
            "ahr": _mean(int(r["ahr_hit"]) for r in app),
            "accuracy": _mean(r["soft_accuracy"] for r in rows),
        })
    return out


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    value: str
    label: str
    report: Optional[EvalReport] = None
    error: Optional[str] = None


def apply_param(cfg: PipelineConfig, param: str, value) -> tuple[PipelineConfig, str]:
    """Config with one knob set from its string form, plus the row label."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    v = str(value).strip()
    if param == "decode_method":
        d = cfg.decode
        dec = DecodeConfig.parse(v, k=d.k, p=d.p, temp=d.temp, beam_width=d.beam_width,
                                 max_caption_len=d.max_caption_len, prompt=d.prompt)
        return cfg.updated(decode=dec), dec.label
    if param == "patch_strategy":
        s = Strategy.parse(v).value
        return cfg.updated(patch_strategy=s), STRATEGY_LABELS[s]
    if param == "fusion":
        return cfg.updated(fusion=v), {"fie": "Fusion-in-Encoder", "fid": "Fusion-in-Decoder"}.get(v, v)
    return cfg.updated(**{param: int(v)}), f"{param}={int(v)}"


def sweep(param: str, values: Sequence, base_cfg: PipelineConfig, assets: Assets,
          threads: int = 1) -> list[SweepRow]:
    """One full evaluation per value, all sharing the base seed."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    out = []
    for v in values:
        try:
            cfg, label = apply_param(base_cfg, param, v)
        except (ValueError, KeyError) as e:
            out.append(SweepRow(str(v), str(v), None, f"{type(e).__name__}: {e}"))
            continue
        out.append(SweepRow(str(v), label, evaluate(assets, cfg, threads)))
    return out


SWEEP_COLUMNS = ("param", "value", "label", "n_questions", "n_failed", "soft_accuracy",
                 "exact_match", "ahr", "n_ahr_applicable", "n_ahr_excluded", "mean_captions_kept",
                 "error")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return _fmt_float(v)
    return str(v)


def sweep_csv(param: str, rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        agg = r.report.aggregates if r.report else {}
        err = r.error
        if err is None and r.report is not None and r.report.failed:
            first = next(x["error"] for x in r.report.rows if x["error"])
            err = f"{agg['n_failed']} question(s) failed; first: {first}"
        w.writerow([_cell(x) for x in (
            param, r.value, r.label, agg.get("n_questions"), agg.get("n_failed"),
            agg.get("soft_accuracy"), agg.get("exact_match"), agg.get("ahr"),
            agg.get("n_ahr_applicable"), agg.get("n_ahr_excluded"), agg.get("mean_captions_kept"),
            err)])
    return buf.getvalue()


def buckets_csv(buckets: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(buckets[0]) if buckets else []
    w.writerow(cols)
    for b in buckets:
        w.writerow([_cell(b[c]) for c in cols])
    return buf.getvalue()
