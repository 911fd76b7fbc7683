"""Command line entry point: ``tumorseg <subcommand> ...``.

Subcommands
-----------
segment    segment one image inside a bounding box
evaluate   score a predicted mask against a ground-truth mask
phantom    write a synthetic phantom (image, mask, bbox)
report     aggregate case records into a comparison table
rpn-demo   anchors, labels and loss breakdown for an anchor batch
batch      run a manifest of cases, then report

Set ``SEG_LOG_LEVEL`` to one of error, warn, info, debug.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import rpn
from .errors import TumorSegError
from .imaging import encode_u8, image_bytes, load_mask, mask_bytes, write_atomic
from .metrics import evaluate_pair
from .phantoms import PhantomSpec, generate
from .pipeline import (
    METHODS,
    Case,
    RunConfig,
    aggregate,
    dump_json,
    format_table,
    load_config,
    load_manifest,
    load_records,
    read_json,
    run_batch,
    run_case,
    write_report,
)

log = logging.getLogger("tumorseg")

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("SEG_LOG_LEVEL", "warn").lower()
    logging.basicConfig(level=_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    acwe_over = {}
    for flag, key in (
        ("iterations", "iterations"),
        ("smoothing_passes", "smoothing_passes"),
        ("lambda1", "lambda1"),
        ("lambda2", "lambda2"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            acwe_over[key] = v
    if acwe_over:
        cfg = replace(cfg, acwe=replace(cfg.acwe, **acwe_over))
    if getattr(args, "closing_radius", None) is not None:
        cfg = replace(cfg, edge=replace(cfg.edge, closing_radius=args.closing_radius))
    if args.jobs is not None:
        cfg = replace(cfg, parallelism=args.jobs)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    io = dict(cfg.io)
    if args.out is not None:
        io["out"] = args.out
    return replace(cfg, io=io)


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.io.get("out", "."))


def cmd_segment(args) -> int:
    cfg = _effective_config(args)
    case = Case(args.case_id or Path(args.image).stem, args.image, args.bbox, args.truth)
    record = run_case(case, args.method, cfg, _out_dir(cfg), fmt=args.format, with_overlay=args.overlay)
    out = {"mask": str(_out_dir(cfg) / record.mask)}
    if record.stats is not None:
        out["stats"] = record.stats.to_json()
    if record.report is not None:
        out["report"] = record.report.to_json()
    print(json.dumps(out, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_pair(load_mask(args.pred), load_mask(args.truth), empty_boundary="nan")
    payload = dump_json(report.to_json())
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_atomic(out / "evaluation.json", payload)
    sys.stdout.write(payload.decode())
    return 0


def cmd_phantom(args) -> int:
    data = read_json(args.spec)
    if not isinstance(data, dict):
        raise TumorSegError(f"{args.spec}: phantom spec must be a JSON object")
    spec = PhantomSpec.from_json(data)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    image, mask, box = generate(spec)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    ext = args.format
    files = {
        f"{args.name}_image.{ext}": encode_u8(image_bytes(image), f".{ext}"),
        f"{args.name}_mask.{ext}": encode_u8(mask_bytes(mask), f".{ext}"),
        f"{args.name}_bbox.json": dump_json(box.to_json()),
    }
    for name, payload in files.items():
        write_atomic(out / name, payload)
    print(json.dumps({"files": [str(out / n) for n in files], "bbox": box.to_json()}, indent=2))
    return 0


def cmd_report(args) -> int:
    summary = aggregate(load_records(args.records))
    if args.out is not None:
        write_report(summary, args.out)
    sys.stdout.write(format_table(summary))
    return 0


def _demo_batch(data: dict):
    if "anchors" in data:
        anchors = [rpn.Box(*map(float, a)) for a in data["anchors"]]
    else:
        center = tuple(data.get("center", (320.0, 320.0)))
        anchors = rpn.generate_anchors(
            center, data.get("scales", rpn.DEFAULT_SCALES), data.get("ratios", rpn.DEFAULT_RATIOS)
        )
    if "labels" in data:
        labels = [rpn.AnchorLabel.parse(v) for v in data["labels"]]
    elif "gt" in data:
        labels = rpn.label_anchors(anchors, rpn.Box(*map(float, data["gt"])))
    else:
        labels = None
    return anchors, labels


def cmd_rpn_demo(args) -> int:
    data = read_json(args.batch)
    if not isinstance(data, dict):
        raise TumorSegError(f"{args.batch}: anchor batch must be a JSON object")
    anchors, labels = _demo_batch(data)
    out = {
        "anchors": [[a.cx, a.cy, a.w, a.h] for a in anchors],
        "labels": None if labels is None else [lab.name.lower() for lab in labels],
        "loss": None,
    }
    if labels is not None and "scores" in data:
        payload = dict(data)
        payload["anchors"] = out["anchors"]
        payload["labels"] = [int(lab) for lab in labels]
        total, cls_term, reg_term = rpn.rpn_loss(rpn.AnchorBatch.from_json(payload))
        out["loss"] = {"total": total, "cls_term": cls_term, "reg_term": reg_term}
    print(json.dumps(out, indent=2))
    return 0


def cmd_batch(args) -> int:
    cfg = _effective_config(args)
    cases = load_manifest(args.manifest)
    methods = args.method or ["chanvese"]
    out = _out_dir(cfg)
    records = run_batch(cases, methods, cfg, out / "records", fmt=args.format)
    summary = aggregate(records)
    write_report(summary, out)
    sys.stdout.write(format_table(summary))
    return 0


def _common(p: argparse.ArgumentParser, method_multi: bool = False):
    p.add_argument("--config", help="JSON run config (keys: acwe, edge, io, parallelism, seed)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")
    if method_multi:
        p.add_argument("--method", choices=METHODS, action="append", help="repeatable")
    else:
        p.add_argument("--method", choices=METHODS, default="chanvese")


def _segment_knobs(p):
    p.add_argument("--iterations", type=int)
    p.add_argument("--smoothing-passes", type=int)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--closing-radius", type=int)
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tumorseg", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment an image inside a bounding box")
    p.add_argument("image")
    p.add_argument("bbox", help="bounding box JSON")
    p.add_argument("--truth", help="ground-truth mask; adds a report to the case record")
    p.add_argument("--case-id")
    p.add_argument("--overlay", action="store_true", help="also write a boundary overlay PNG")
    _common(p)
    _segment_knobs(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score a predicted mask against ground truth")
    p.add_argument("pred")
    p.add_argument("truth")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("phantom", help="generate a synthetic phantom")
    p.add_argument("spec", help="phantom spec JSON")
    p.add_argument("--name", default="phantom")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    _common(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("report", help="aggregate case records")
    p.add_argument("records", help="directory of case record JSON files")
    _common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rpn-demo", help="anchor labels and loss breakdown")
    p.add_argument("batch", help="anchor batch JSON")
    _common(p)
    p.set_defaults(func=cmd_rpn_demo)

    p = sub.add_parser("batch", help="run a manifest of cases and report")
    p.add_argument("manifest", help='JSON: {"cases": [{"id", "image", "bbox", "truth"?}, ...]}')
    _common(p, method_multi=True)
    _segment_knobs(p)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TumorSegError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"tumorseg {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
