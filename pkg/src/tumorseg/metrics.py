"""Segmentation and classification quality measures.

Masks are compared with 1 as the positive class. Label maps (for VOI and
GCE) may hold any small non-negative integers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import EmptyBoundaryError, ParameterError

REPORT_FIELDS = ("dice", "accuracy", "ri", "voi", "gce", "bde", "psnr", "mae")


class DegenerateMetricWarning(UserWarning):
    """A metric was evaluated on inputs where it is undefined; a convention was used."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ParameterError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _same_shape(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def confusion(pred, truth) -> ConfusionCounts:
    pred, truth = _same_shape(pred, truth)
    p = pred.astype(bool)
    t = truth.astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def dice(c: ConfusionCounts) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        warnings.warn("dice of two empty masks defined as 1.0", DegenerateMetricWarning, stacklevel=2)
        return 1.0
    return 2 * c.tp / denom


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ParameterError("no samples")
    return (c.tp + c.tn) / c.total


def rand_index(c: ConfusionCounts) -> float:
    """Pixel-agreement form ``(TP + TN) / N``, identical to :func:`accuracy`."""
    return accuracy(c)


def _entropy_bits(counts: np.ndarray) -> float:
    counts = counts[counts > 0]
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _contingency(a, b) -> np.ndarray:
    a, b = _same_shape(a, b)
    _, ia = np.unique(a.ravel(), return_inverse=True)
    _, ib = np.unique(b.ravel(), return_inverse=True)
    na, nb = ia.max() + 1, ib.max() + 1
    return np.bincount(ia * nb + ib, minlength=na * nb).reshape(na, nb)


def voi(a, b) -> float:
    """Variation of information in bits: ``H(a) + H(b) - 2 MI(a, b)``."""
    table = _contingency(a, b)
    h_a = _entropy_bits(table.sum(axis=1))
    h_b = _entropy_bits(table.sum(axis=0))
    h_ab = _entropy_bits(table.ravel())
    mi = h_a + h_b - h_ab
    return max(h_a + h_b - 2 * mi, 0.0)


def gce(a, b) -> float:
    """Global consistency error.

    A pixel's local refinement error is the fraction of its region in one map
    that falls outside its region in the other; the two directional sums are
    compared and the smaller is normalized by the pixel count.
    """
    table = _contingency(a, b).astype(np.float64)
    n = table.sum()
    rows = table.sum(axis=1, keepdims=True)
    cols = table.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        e_ab = np.where(table > 0, table * (rows - table) / rows, 0.0).sum()
        e_ba = np.where(table > 0, table * (cols - table) / cols, 0.0).sum()
    return float(min(e_ab, e_ba) / n)


def boundary(mask) -> np.ndarray:
    """Foreground pixels with a 4-neighbour in the background (outside the frame counts as background)."""
    m = np.pad(np.asarray(mask).astype(bool), 1)
    interior = m[1:-1, :-2] & m[1:-1, 2:] & m[:-2, 1:-1] & m[2:, 1:-1]
    return m[1:-1, 1:-1] & ~interior


def _directed_bde(src: np.ndarray, dst: np.ndarray) -> float:
    dist = ndimage.distance_transform_edt(~dst)
    return float(dist[src].mean())


def bde(a, b) -> float:
    """Symmetric boundary displacement error in pixels."""
    a, b = _same_shape(a, b)
    ba, bb = boundary(a), boundary(b)
    if not ba.any() or not bb.any():
        raise EmptyBoundaryError("boundary displacement needs non-empty boundaries on both masks")
    return (_directed_bde(ba, bb) + _directed_bde(bb, ba)) / 2


def _diff255(pred, truth) -> np.ndarray:
    pred, truth = _same_shape(pred, truth)
    return 255.0 * (pred.astype(bool).astype(np.float64) - truth.astype(bool).astype(np.float64))


def psnr(pred, truth) -> float:
    """Peak signal-to-noise ratio of {0, 255} mask images; ``inf`` when identical."""
    mse = float(np.mean(_diff255(pred, truth) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def mae(pred, truth) -> float:
    return float(np.mean(np.abs(_diff255(pred, truth))))


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


def cls_stats(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, PPV, NPV, sensitivity and specificity; NaN where undefined."""
    return {
        "accuracy": _ratio(c.tp + c.tn, c.total),
        "ppv": _ratio(c.tp, c.tp + c.fp),
        "npv": _ratio(c.tn, c.tn + c.fn),
        "sensitivity": _ratio(c.tp, c.tp + c.fn),
        "specificity": _ratio(c.tn, c.tn + c.fp),
    }


def cohen_kappa(c: ConfusionCounts) -> float:
    n = c.total
    if n == 0:
        raise ParameterError("no samples")
    p_o = (c.tp + c.tn) / n
    p_e = ((c.tp + c.fp) * (c.tp + c.fn) + (c.fn + c.tn) * (c.fp + c.tn)) / (n * n)
    if p_e == 1:
        return math.nan
    return (p_o - p_e) / (1 - p_e)


class ScoredSample(NamedTuple):
    score: float
    positive: bool


class RocCurve(NamedTuple):
    curve: list[tuple[float, float]]
    auc: float


def roc_auc(samples) -> RocCurve:
    """ROC curve over distinct score thresholds (descending) and its trapezoid area."""
    scores = np.array([float(s.score) for s in samples])
    labels = np.array([bool(s.positive) for s in samples])
    if not np.isfinite(scores).all():
        raise ParameterError("scores must be finite")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ParameterError("ROC needs at least one positive and one negative sample")
    order = np.argsort(-scores, kind="stable")
    scores, labels = scores[order], labels[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
    tps = np.cumsum(labels)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(list(zip(fpr.tolist(), tpr.tolist())), auc)


@dataclass(frozen=True)
class SegReport:
    dice: float
    accuracy: float
    ri: float
    voi: float
    gce: float
    bde: float
    psnr: float
    mae: float

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if math.isinf(v):
                v = "inf"
            elif math.isnan(v):
                v = None
            out[f.name] = v
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SegReport":
        vals = {}
        for name in REPORT_FIELDS:
            v = data[name]
            if v == "inf":
                v = math.inf
            elif v is None:
                v = math.nan
            vals[name] = float(v)
        return cls(**vals)


def evaluate_pair(pred, truth, empty_boundary: str = "raise") -> SegReport:
    """All segmentation measures for one prediction/ground-truth pair.

    ``empty_boundary="nan"`` reports BDE as NaN instead of raising when a mask
    is empty.
    """
    c = confusion(pred, truth)
    try:
        b = bde(pred, truth)
    except EmptyBoundaryError:
        if empty_boundary != "nan":
            raise
        b = math.nan
    return SegReport(
        dice=dice(c),
        accuracy=accuracy(c),
        ri=rand_index(c),
        voi=voi(pred, truth),
        gce=gce(pred, truth),
        bde=b,
        psnr=psnr(pred, truth),
        mae=mae(pred, truth),
    )
