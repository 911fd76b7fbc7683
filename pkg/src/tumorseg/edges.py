"""Gradient (Prewitt/Sobel) baseline segmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .acwe import check_box_in_image, working_window
from .errors import ParameterError
from .imaging import BoundingBox, intensity_bins

# row weights of the x-kernel [[-1, 0, 1], [-w, 0, w], [-1, 0, 1]]; the y-kernel is its transpose
_KERNELS = {"prewitt": (1.0, 1.0, 1.0), "sobel": (1.0, 2.0, 1.0)}


@dataclass(frozen=True)
class EdgeParams:
    operator: str = "prewitt"
    threshold: str | float = "otsu"
    closing_radius: int = 2

    def __post_init__(self):
        if self.operator not in _KERNELS:
            raise ParameterError(f"unknown edge operator {self.operator!r}")
        if self.threshold != "otsu":
            if isinstance(self.threshold, str) or not 0.0 <= float(self.threshold) <= 1.0:
                raise ParameterError("threshold must be 'otsu' or a value in [0, 1]")
        if self.closing_radius < 0:
            raise ParameterError("closing_radius must be >= 0")

    def to_json(self) -> dict:
        threshold = "otsu" if self.threshold == "otsu" else {"fixed": float(self.threshold)}
        return {"operator": self.operator, "threshold": threshold, "closing_radius": self.closing_radius}

    @classmethod
    def from_json(cls, data: dict) -> "EdgeParams":
        threshold = data.get("threshold", "otsu")
        if isinstance(threshold, dict):
            threshold = float(threshold["fixed"])
        return cls(
            operator=data.get("operator", "prewitt"),
            threshold=threshold,
            closing_radius=int(data.get("closing_radius", 2)),
        )


def gradient_magnitude(img: np.ndarray, operator: str = "prewitt") -> np.ndarray:
    """sqrt(Gx^2 + Gy^2) with edge-replicated borders, scaled so the max is 1."""
    if operator not in _KERNELS:
        raise ParameterError(f"unknown edge operator {operator!r}")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 3:
        raise ParameterError("gradient needs an image of at least 3x3")
    a, b, c = _KERNELS[operator]
    p = np.pad(img, 1, mode="edge")
    # differences first, so flat neighbourhoods give exactly zero
    dx = p[:, 2:] - p[:, :-2]
    dy = p[2:, :] - p[:-2, :]
    gx = a * dx[:-2] + b * dx[1:-1] + c * dx[2:]
    gy = a * dy[:, :-2] + b * dy[:, 1:-1] + c * dy[:, 2:]
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0:
        return np.zeros_like(mag)
    return mag / peak


def otsu_threshold(img: np.ndarray) -> float:
    """Otsu's threshold over 256 bins.

    Returns the midpoint between the last bin of the lower class and the
    next bin, so ``img > t`` splits exactly at the chosen bin. Ties go to the
    lowest split; if no split separates anything the result is 0.
    """
    bins = intensity_bins(img).ravel()
    if bins.size == 0:
        raise ParameterError("empty image")
    hist = np.bincount(bins, minlength=256).astype(np.float64)
    p = hist / hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(p)
    m0 = np.cumsum(p * levels)
    mu = m0[-1]
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu * w0 - m0) ** 2 / (w0 * w1)
    between[~np.isfinite(between) | (w0 <= 0) | (w1 <= 1e-15)] = 0.0
    # splits after bin 255 put everything in one class
    between = between[:255]
    best = between.max()
    if best <= 0:
        return 0.0
    k = int(np.flatnonzero(between >= best * (1 - 1e-12))[0])
    return (k + 0.5) / 255.0


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return xx**2 + yy**2 <= radius**2


_FOUR = ndimage.generate_binary_structure(2, 1)


def region_from_edges(edges: np.ndarray, closing_radius: int) -> np.ndarray:
    """Close an edge map, fill enclosed areas and keep one 4-connected region.

    The kept region is the one under the window centroid when there is one,
    otherwise the largest.
    """
    edges = np.asarray(edges, dtype=bool)
    if closing_radius > 0:
        pad = closing_radius
        padded = np.pad(edges, pad)
        closed = ndimage.binary_closing(padded, structure=_disk(closing_radius))
        edges = closed[pad:-pad, pad:-pad]
    filled = ndimage.binary_fill_holes(edges, structure=_FOUR)
    labels, n = ndimage.label(filled, structure=_FOUR)
    if n == 0:
        return np.zeros(edges.shape, dtype=np.uint8)
    cy, cx = (edges.shape[0] - 1) // 2, (edges.shape[1] - 1) // 2
    keep = labels[cy, cx]
    if keep == 0:
        sizes = np.bincount(labels.ravel())[1:]
        keep = int(np.argmax(sizes)) + 1
    return (labels == keep).astype(np.uint8)


def segment_baseline(
    img: np.ndarray, box: BoundingBox, params: EdgeParams | None = None
) -> np.ndarray:
    """Edge-detector segmentation of the object inside ``box`` (full-frame mask)."""
    params = params or EdgeParams()
    img = np.asarray(img, dtype=np.float64)
    check_box_in_image(img, box)
    rows, cols = working_window(box)
    window = img[rows, cols]
    mag = gradient_magnitude(window, params.operator)
    thr = otsu_threshold(mag) if params.threshold == "otsu" else float(params.threshold)
    region = region_from_edges(mag > thr, params.closing_radius)
    mask = np.zeros(img.shape, dtype=np.uint8)
    mask[rows, cols] = region
    return mask
