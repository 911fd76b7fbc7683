"""Case-level orchestration: configs, per-case runs, records and aggregate reports."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import acwe, edges
from .errors import ParameterError
from .imaging import (
    BoundingBox,
    encode_u8,
    frame_of,
    image_bytes,
    load_image,
    load_mask,
    map_bbox,
    mask_bytes,
    write_atomic,
)
from .metrics import REPORT_FIELDS, SegReport, boundary, evaluate_pair

log = logging.getLogger(__name__)

METHODS = ("chanvese", "prewitt", "sobel")


@dataclass(frozen=True)
class RunConfig:
    acwe: acwe.AcweParams = field(default_factory=acwe.AcweParams)
    edge: edges.EdgeParams = field(default_factory=edges.EdgeParams)
    io: dict = field(default_factory=dict)
    parallelism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.parallelism < 1:
            raise ParameterError("parallelism must be >= 1")

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        unknown = set(data) - {"acwe", "edge", "io", "parallelism", "seed"}
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            acwe=acwe.AcweParams(**data.get("acwe", {})),
            edge=edges.EdgeParams.from_json(data.get("edge", {})),
            io=dict(data.get("io", {})),
            parallelism=int(data.get("parallelism", 1)),
            seed=int(data.get("seed", 0)),
        )


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as fh:
        return RunConfig.from_json(json.load(fh))


def read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON ({exc})") from exc


def dump_json(data) -> bytes:
    return (json.dumps(data, indent=2, sort_keys=False) + "\n").encode()


def read_bbox(path) -> tuple[BoundingBox, float | None]:
    """Bounding box JSON plus its optional ``confidence`` pass-through."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: bounding box must be a JSON object")
    conf = data.get("confidence")
    return BoundingBox.from_json(data), (None if conf is None else float(conf))


def to_image_frame(box: BoundingBox, img: np.ndarray) -> BoundingBox:
    frame = frame_of(img)
    if box.frame == frame:
        return box
    log.info("mapping box from %sx%s to %sx%s", box.frame.width, box.frame.height, frame.width, frame.height)
    return map_bbox(box, box.frame, frame)


def segment_image(img, box, method: str, config: RunConfig):
    """Run one method; returns ``(mask, RunStats or None)``."""
    if method == "chanvese":
        return acwe.segment(img, box, config.acwe)
    if method in ("prewitt", "sobel"):
        return edges.segment_baseline(img, box, replace(config.edge, operator=method)), None
    raise ParameterError(f"unknown method {method!r}")


def overlay(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.array(img, dtype=np.float64, copy=True)
    out[boundary(mask)] = 1.0
    return out


@dataclass
class CaseRecord:
    case_id: str
    image: str
    bbox: BoundingBox
    method: str
    mask: str
    truth: str | None = None
    report: SegReport | None = None
    stats: acwe.RunStats | None = None
    confidence: float | None = None

    def to_json(self) -> dict:
        out = {
            "case_id": self.case_id,
            "method": self.method,
            "image": self.image,
            "bbox": self.bbox.to_json(),
            "mask": self.mask,
            "truth": self.truth,
            "report": None if self.report is None else self.report.to_json(),
            "stats": None if self.stats is None else self.stats.to_json(),
        }
        if self.confidence is not None:
            out["confidence"] = self.confidence
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CaseRecord":
        try:
            stats = data.get("stats")
            return cls(
                case_id=str(data["case_id"]),
                image=data["image"],
                bbox=BoundingBox.from_json(data["bbox"]),
                method=data["method"],
                mask=data.get("mask", ""),
                truth=data.get("truth"),
                report=None if data.get("report") is None else SegReport.from_json(data["report"]),
                stats=None if stats is None else acwe.RunStats(**stats),
                confidence=data.get("confidence"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed case record: {exc}") from exc


@dataclass(frozen=True)
class Case:
    case_id: str
    image: str
    bbox: str
    truth: str | None = None


def run_case(case: Case, method: str, config: RunConfig, out_dir, fmt: str = "pgm", with_overlay: bool = False):
    """Segment one case, write its outputs into ``out_dir`` and return the record.

    Everything is computed before the first file is written.
    """
    img = load_image(case.image)
    box, confidence = read_bbox(case.bbox)
    box = to_image_frame(box, img)
    mask, stats = segment_image(img, box, method, config)
    report = None
    if case.truth:
        report = evaluate_pair(mask, load_mask(case.truth), empty_boundary="nan")
    stem = f"{case.case_id}_{method}"
    mask_name = f"{stem}_mask.{fmt}"
    record = CaseRecord(
        case_id=case.case_id,
        image=case.image,
        bbox=box,
        method=method,
        mask=mask_name,
        truth=case.truth,
        report=report,
        stats=stats,
        confidence=confidence,
    )
    payloads = {mask_name: encode_u8(mask_bytes(mask), mask_name)}
    if stats is not None:
        payloads[f"{stem}_stats.json"] = dump_json(stats.to_json())
    if with_overlay:
        payloads[f"{stem}_overlay.png"] = encode_u8(image_bytes(overlay(img, mask)), ".png")
    payloads[f"{stem}_record.json"] = dump_json(record.to_json())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in payloads.items():
        write_atomic(out_dir / name, payload)
    return record


def _run_case_job(args):
    return run_case(*args)


def run_batch(cases, methods, config: RunConfig, out_dir, fmt: str = "pgm"):
    """Run every (case, method) pair, fanning out over ``config.parallelism`` workers."""
    jobs = [(case, m, config, out_dir, fmt) for case in cases for m in methods]
    if config.parallelism == 1 or len(jobs) <= 1:
        return [_run_case_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(_run_case_job, jobs))


def load_manifest(path) -> list[Case]:
    """Cases from a manifest JSON; relative paths resolve against its directory."""
    data = read_json(path)
    base = Path(path).resolve().parent
    entries = data.get("cases") if isinstance(data, dict) else data
    if not entries:
        raise ParameterError(f"{path}: manifest lists no cases")

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    cases = []
    for entry in entries:
        try:
            cases.append(Case(str(entry["id"]), resolve(entry["image"]), resolve(entry["bbox"]), resolve(entry.get("truth"))))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed manifest entry {entry!r}") from exc
    return cases


def load_records(records_dir) -> list[CaseRecord]:
    paths = sorted(Path(records_dir).glob("*.json"))
    records = []
    for p in paths:
        data = read_json(p)
        if isinstance(data, dict) and "case_id" in data and "method" in data:
            records.append(CaseRecord.from_json(data))
    if not records:
        raise ParameterError(f"no case records in {records_dir}")
    return records


def _mean(values):
    finite = [v for v in values if not (math.isinf(v) or math.isnan(v))]
    return math.fsum(finite) / len(finite) if finite else None


def aggregate(records) -> dict:
    """Per-case rows (sorted by case id) and per-method means of each report field.

    ``inf`` PSNR values and undefined (NaN) values are left out of the means
    and counted separately.
    """
    ordered = sorted(records, key=lambda r: (r.case_id, METHODS.index(r.method) if r.method in METHODS else 99, r.method))
    cases = []
    by_method: dict[str, list[SegReport]] = {}
    for r in ordered:
        row = {"case_id": r.case_id, "method": r.method}
        if r.confidence is not None:
            row["confidence"] = r.confidence
        if r.report is not None:
            row.update(r.report.to_json())
            by_method.setdefault(r.method, []).append(r.report)
        cases.append(row)
    methods = {}
    for m in sorted(by_method, key=lambda m: (METHODS.index(m) if m in METHODS else 99, m)):
        reports = by_method[m]
        summary = {"n": len(reports)}
        for name in REPORT_FIELDS:
            summary[name] = _mean([getattr(rep, name) for rep in reports])
        summary["psnr_inf_count"] = sum(math.isinf(rep.psnr) for rep in reports)
        summary["bde_undefined_count"] = sum(math.isnan(rep.bde) for rep in reports)
        methods[m] = summary
    return {"fields": list(REPORT_FIELDS), "cases": cases, "methods": methods}


def _fmt(v):
    if v is None:
        return "-"
    if v == "inf":
        return "inf"
    return f"{v:.4f}"


def format_table(summary: dict) -> str:
    head = ["case", "method"] + list(REPORT_FIELDS)
    rows = [head]
    for row in summary["cases"]:
        rows.append([row["case_id"], row["method"]] + [_fmt(row.get(f)) for f in REPORT_FIELDS])
    for m, s in summary["methods"].items():
        rows.append([f"mean(n={s['n']})", m] + [_fmt(s[f]) for f in REPORT_FIELDS])
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report(summary: dict, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = format_table(summary)
    jpath, tpath = out_dir / "report.json", out_dir / "report.txt"
    write_atomic(jpath, dump_json(summary))
    write_atomic(tpath, text.encode())
    return jpath, tpath


