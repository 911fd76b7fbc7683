"""Region proposal box math: anchors, IoU labels, box deltas, loss, ROI pooling.

Boxes here are center-based (``cx, cy, w, h``) floats, unlike the integer
top-left :class:`~tumorseg.imaging.BoundingBox`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ParameterError
from .imaging import BoundingBox

DEFAULT_SCALES = (128.0, 256.0, 512.0)
DEFAULT_RATIOS = (0.5, 1.0, 2.0)
POSITIVE_IOU = 0.7
NEGATIVE_IOU = 0.3
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Box:
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ParameterError(f"box size must be positive, got w={self.w} h={self.h}")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        return (
            self.cx - self.w / 2,
            self.cy - self.h / 2,
            self.cx + self.w / 2,
            self.cy + self.h / 2,
        )

    @property
    def area(self) -> float:
        return self.w * self.h

    def scaled(self, k: float) -> "Box":
        return Box(self.cx * k, self.cy * k, self.w * k, self.h * k)


class AnchorLabel(IntEnum):
    IGNORE = -1
    NEGATIVE = 0
    POSITIVE = 1

    @classmethod
    def parse(cls, value) -> "AnchorLabel":
        if value is None or value == "ignore":
            return cls.IGNORE
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(int(value))


def generate_anchors(
    center: tuple[float, float],
    scales=DEFAULT_SCALES,
    ratios=DEFAULT_RATIOS,
) -> list[Box]:
    """One anchor per (scale, ratio) with area ``scale**2`` and ``w / h == ratio``."""
    if not scales or not ratios:
        raise ParameterError("scales and ratios must be non-empty")
    if any(s <= 0 for s in scales) or any(r <= 0 for r in ratios):
        raise ParameterError("scales and ratios must be positive")
    cx, cy = center
    anchors = []
    for s in scales:
        for r in ratios:
            anchors.append(Box(cx, cy, s * math.sqrt(r), s / math.sqrt(r)))
    return anchors


def iou(a: Box, b: Box) -> float:
    ax0, ay0, ax1, ay1 = a.corners
    bx0, by0, bx1, by1 = b.corners
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def label_for_iou(overlap: float) -> AnchorLabel:
    # strict inequalities: exactly 0.3 or 0.7 stays unassigned
    if overlap > POSITIVE_IOU:
        return AnchorLabel.POSITIVE
    if overlap < NEGATIVE_IOU:
        return AnchorLabel.NEGATIVE
    return AnchorLabel.IGNORE


def label_anchors(anchors: list[Box], gt: Box) -> list[AnchorLabel]:
    if not anchors:
        raise ParameterError("no anchors to label")
    return [label_for_iou(iou(a, gt)) for a in anchors]


def parameterize(anchor: Box, target: Box) -> np.ndarray:
    """Regression targets (tx, ty, tw, th) of ``target`` relative to ``anchor``."""
    return np.array(
        [
            (target.cx - anchor.cx) / anchor.w,
            (target.cy - anchor.cy) / anchor.h,
            math.log(target.w / anchor.w),
            math.log(target.h / anchor.h),
        ]
    )


def decode(anchor: Box, t) -> Box:
    tx, ty, tw, th = (float(v) for v in t)
    return Box(
        anchor.cx + tx * anchor.w,
        anchor.cy + ty * anchor.h,
        anchor.w * math.exp(tw),
        anchor.h * math.exp(th),
    )


def smooth_robust_loss(x):
    """Smooth L1: ``0.5 x**2`` for ``|x| < 1``, else ``|x| - 0.5``. Elementwise."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    out = np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)
    return float(out) if out.ndim == 0 else out


def log_loss(p: float, positive: bool) -> float:
    """Binary log loss; the probability of the true class is floored at 1e-12."""
    q = p if positive else 1.0 - p
    return -math.log(max(q, PROB_FLOOR))


@dataclass
class AnchorBatch:
    anchors: list[Box]
    labels: list[AnchorLabel]
    scores: list[float]
    t: list = field(default_factory=list)
    t_star: list = field(default_factory=list)
    lam: float = 10.0
    n_cls: int | None = None
    n_reg: int | None = None

    def validate(self):
        n = len(self.anchors)
        if not (len(self.labels) == len(self.scores) == n):
            raise ParameterError("anchors, labels and scores must have equal length")
        if self.t and len(self.t) != n:
            raise ParameterError("t must have one entry per anchor")
        if self.t_star and len(self.t_star) != n:
            raise ParameterError("t_star must have one entry per anchor")
        for p in self.scores:
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"score {p} outside [0, 1]")
        for i, lab in enumerate(self.labels):
            if lab == AnchorLabel.POSITIVE:
                if not self.t or not self.t_star or self.t[i] is None or self.t_star[i] is None:
                    raise ParameterError(f"positive anchor {i} needs t and t_star")
        if self.n_cls is not None and self.n_cls < 1:
            raise ParameterError("n_cls must be >= 1")
        if self.n_reg is not None and self.n_reg < 1:
            raise ParameterError("n_reg must be >= 1")

    @classmethod
    def from_json(cls, data: dict) -> "AnchorBatch":
        try:
            anchors = [Box(*map(float, a)) for a in data["anchors"]]
            labels = [AnchorLabel.parse(v) for v in data["labels"]]
            t = [None if v is None else [float(x) for x in v] for v in data.get("t", [])]
            t_star = [None if v is None else [float(x) for x in v] for v in data.get("t_star", [])]
            return cls(
                anchors=anchors,
                labels=labels,
                scores=[float(p) for p in data["scores"]],
                t=t,
                t_star=t_star,
                lam=float(data.get("lambda", 10.0)),
                n_cls=data.get("n_cls"),
                n_reg=data.get("n_reg"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"malformed anchor batch: {exc}") from exc


def rpn_loss(batch: AnchorBatch) -> tuple[float, float, float]:
    """Return ``(total, cls_term, reg_term)``; ignored anchors are excluded.

    When not given, ``n_cls`` is the number of non-ignored anchors and
    ``n_reg`` the number of anchors.
    """
    batch.validate()
    used = [i for i, lab in enumerate(batch.labels) if lab != AnchorLabel.IGNORE]
    n_cls = batch.n_cls if batch.n_cls is not None else max(len(used), 1)
    n_reg = batch.n_reg if batch.n_reg is not None else max(len(batch.anchors), 1)
    cls_sum = 0.0
    reg_sum = 0.0
    for i in used:
        positive = batch.labels[i] == AnchorLabel.POSITIVE
        cls_sum += log_loss(batch.scores[i], positive)
        if positive:
            diff = np.asarray(batch.t[i], dtype=np.float64) - np.asarray(batch.t_star[i], dtype=np.float64)
            reg_sum += float(np.sum(smooth_robust_loss(diff)))
    cls_term = cls_sum / n_cls
    reg_term = batch.lam * reg_sum / n_reg
    return cls_term + reg_term, cls_term, reg_term


def roi_pool(feature: np.ndarray, region: BoundingBox, out_h: int, out_w: int) -> np.ndarray:
    """Max-pool ``region`` of ``feature`` onto an ``out_h`` x ``out_w`` grid.

    Cell ``k`` along an axis of length ``n`` covers ``[floor(k n / out), floor((k+1) n / out))``.
    """
    feature = np.asarray(feature)
    fh, fw = feature.shape
    if region.x + region.w > fw or region.y + region.h > fh:
        raise ParameterError("region lies outside the feature map")
    if out_h < 1 or out_w < 1:
        raise ParameterError("output dims must be >= 1")
    if out_h > region.h or out_w > region.w:
        raise ParameterError(
            f"output {out_h}x{out_w} exceeds region {region.h}x{region.w}"
        )
    patch = feature[region.slices]
    rb = [k * region.h // out_h for k in range(out_h + 1)]
    cb = [k * region.w // out_w for k in range(out_w + 1)]
    out = np.empty((out_h, out_w), dtype=feature.dtype)
    for i in range(out_h):
        for j in range(out_w):
            out[i, j] = patch[rb[i] : rb[i + 1], cb[j] : cb[j + 1]].max()
    return out
