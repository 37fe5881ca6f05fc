"""``pnp run`` and ``pnp sweep``.

Seed precedence: --seed, then the PNP_SEED environment variable, then the
config file.  ``run`` exits 1 when any question failed, 2 on bad arguments
or unreadable inputs.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .captioning import DecodeConfig
from .config import PipelineConfig, load_assets, load_config
from .harness import SWEEP_PARAMS, evaluate, sweep, sweep_csv
from .relevance import export_heatmap

DECODE_CHOICES = ("topk", "nucleus", "temp", "beam")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON (default: bundled toy setup)")
    p.add_argument("--seed", type=int)
    p.add_argument("--num-captions", type=int, dest="n_captions")
    p.add_argument("--k-prime", type=int)
    p.add_argument("--gradcam-layer", type=int, help="1-based cross-attention layer")
    p.add_argument("--decode", choices=DECODE_CHOICES)
    p.add_argument("--top-k", type=int)
    p.add_argument("--top-p", type=float)
    p.add_argument("--temperature", type=float)
    p.add_argument("--beam-width", type=int)
    p.add_argument("--max-caption-len", type=int)
    p.add_argument("--fusion", choices=("fie", "fid"))
    p.add_argument("--group-size", type=int)
    p.add_argument("--max-enc-len", type=int)
    p.add_argument("--patch-strategy", choices=("question", "question_guided", "uniform", "all"))
    p.add_argument("--human-captions", action="store_true",
                   help="answer from the dataset's human-written captions")
    p.add_argument("--ahr-word-boundary", action="store_true")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate a dataset and write a JSON report")
    _add_common(run)
    run.add_argument("--export-heatmaps", metavar="DIR")
    run.add_argument("--out", help="report path (default: stdout)")
    sw = sub.add_parser("sweep", help="one evaluation per parameter value, as CSV")
    _add_common(sw)
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out", help="CSV path (default: stdout)")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> PipelineConfig:
    environ = os.environ if environ is None else environ
    cfg = load_config(args.config)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    elif environ.get("PNP_SEED"):
        kw["seed"] = int(environ["PNP_SEED"])
    for name in ("n_captions", "k_prime", "gradcam_layer", "fusion", "group_size", "max_enc_len"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    if args.patch_strategy is not None:
        kw["patch_strategy"] = args.patch_strategy
    if args.human_captions:
        kw["caption_source"] = "human"
    if args.ahr_word_boundary:
        kw["ahr_word_boundary"] = True
    d = cfg.decode.to_dict()
    if args.decode is not None:
        d["method"] = args.decode
    for flag, key in (("top_k", "k"), ("top_p", "p"), ("temperature", "temp"),
                      ("beam_width", "beam_width"), ("max_caption_len", "max_caption_len")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    kw["decode"] = DecodeConfig(**d)
    return cfg.updated(**kw)


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    assets = load_assets(cfg)
    report = evaluate(assets, cfg, threads=max(1, args.threads))
    _write(report.to_json(), args.out)
    if args.export_heatmaps:
        out_dir = Path(args.export_heatmaps)
        out_dir.mkdir(parents=True, exist_ok=True)
        for row, rel in zip(report.rows, report.relevance):
            if rel is not None:
                export_heatmap(rel, out_dir / f"{row['id']}.pgm")
    for row in report.rows:
        if row["error"]:
            print(f"{row['id']}: {row['error']}", file=sys.stderr)
    return 1 if report.failed else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    assets = load_assets(cfg)
    values = [v for v in args.values.split(",") if v.strip()]
    rows = sweep(args.param, values, cfg, assets, threads=max(1, args.threads))
    _write(sweep_csv(args.param, rows), args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except (OSError, ValueError) as e:
        print(f"pnp: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
