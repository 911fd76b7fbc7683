"""Morphological Chan-Vese (active contours without edges).

The level set is binary: ``u == 1`` marks pixels inside the contour. Each
step recomputes the inside/outside means, lets pixels on the boundary band
join whichever region mean they are closer to (lambda-weighted squared
deviation), and then applies the SI/IS curvature operators
``smoothing_passes`` times. The length penalty of the continuous energy is
carried entirely by the number of smoothing passes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ParameterError
from .imaging import BoundingBox, Frame, contrast_stretch, frame_of, histogram_equalize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcweParams:
    lambda1: float = 1.0
    lambda2: float = 1.0
    iterations: int = 100
    smoothing_passes: int = 8
    init_margin: int = 0

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ParameterError("lambda1 and lambda2 must be positive")
        if self.iterations < 1:
            raise ParameterError("iterations must be >= 1")
        if self.smoothing_passes < 0:
            raise ParameterError("smoothing_passes must be >= 0")
        if self.init_margin < 0:
            raise ParameterError("init_margin must be >= 0")


@dataclass
class LevelSetState:
    u: np.ndarray
    c1: float | None = None
    c2: float | None = None
    iteration: int = 0
    converged: bool = False


class RegionMeans(NamedTuple):
    c1: float
    c2: float
    inside_empty: bool
    outside_empty: bool


@dataclass(frozen=True)
class RunStats:
    iterations: int
    converged: bool
    c1: float
    c2: float

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "c1": self.c1,
            "c2": self.c2,
        }


def init_square(box: BoundingBox, margin: int = 0) -> LevelSetState:
    """Square level set: ones on ``box`` inset by ``margin``, in the box's frame."""
    if margin < 0:
        raise ParameterError("margin must be >= 0")
    if box.w - 2 * margin <= 0 or box.h - 2 * margin <= 0:
        raise ParameterError(f"margin {margin} collapses a {box.w}x{box.h} box")
    u = np.zeros((box.frame.height, box.frame.width), dtype=np.uint8)
    u[box.y + margin : box.y + box.h - margin, box.x + margin : box.x + box.w - margin] = 1
    return LevelSetState(u)


def region_means(img: np.ndarray, u: np.ndarray) -> RegionMeans:
    """Mean intensity inside and outside ``u``; an empty region has mean 0."""
    img = np.asarray(img, dtype=np.float64)
    inside = np.asarray(u).astype(bool)
    if img.shape != inside.shape:
        raise ParameterError(f"image {img.shape} and level set {inside.shape} differ")
    n_in = int(inside.sum())
    n_out = inside.size - n_in
    c1 = float(img[inside].mean()) if n_in else 0.0
    c2 = float(img[~inside].mean()) if n_out else 0.0
    return RegionMeans(c1, c2, n_in == 0, n_out == 0)


def smooth(u: np.ndarray, passes: int) -> np.ndarray:
    """Apply the curvature operator ``passes`` times (SI.IS, then IS.SI, ...)."""
    if passes < 0:
        raise ParameterError("passes must be >= 0")
    return kernels.curvature_smooth(u, passes)


def acwe_step(img: np.ndarray, state: LevelSetState, params: AcweParams) -> LevelSetState:
    means = region_means(img, state.u)
    if means.c1 == means.c2:
        return LevelSetState(state.u.copy(), means.c1, means.c2, state.iteration + 1, True)
    u = kernels.band_update(img, state.u, means.c1, means.c2, params.lambda1, params.lambda2)
    u = kernels.curvature_smooth(u, params.smoothing_passes)
    converged = bool(np.array_equal(u, state.u))
    return LevelSetState(u, means.c1, means.c2, state.iteration + 1, converged)


def evolve(img: np.ndarray, state: LevelSetState, params: AcweParams) -> LevelSetState:
    """Step until convergence or ``params.iterations`` steps."""
    while state.iteration < params.iterations and not state.converged:
        state = acwe_step(img, state, params)
    return state


def window_pad(box: BoundingBox) -> int:
    return max(4, math.ceil(0.1 * max(box.w, box.h)))


def working_window(box: BoundingBox) -> tuple[slice, slice]:
    """Box dilated by the working pad and clipped to its frame."""
    pad = window_pad(box)
    y0, x0 = max(box.y - pad, 0), max(box.x - pad, 0)
    y1 = min(box.y + box.h + pad, box.frame.height)
    x1 = min(box.x + box.w + pad, box.frame.width)
    return slice(y0, y1), slice(x0, x1)


def check_box_in_image(img: np.ndarray, box: BoundingBox) -> None:
    frame = frame_of(img)
    if box.frame != frame:
        raise ParameterError(
            f"box frame {box.frame.width}x{box.frame.height} does not match image "
            f"{frame.width}x{frame.height}"
        )


def preprocess_window(window: np.ndarray) -> np.ndarray:
    return histogram_equalize(contrast_stretch(window, 2.0, 98.0))


def segment(
    img: np.ndarray, box: BoundingBox, params: AcweParams | None = None
) -> tuple[np.ndarray, RunStats]:
    """Segment the object inside ``box`` and return a full-frame mask."""
    params = params or AcweParams()
    img = np.asarray(img, dtype=np.float64)
    check_box_in_image(img, box)
    rows, cols = working_window(box)
    window = preprocess_window(img[rows, cols])
    wh, ww = window.shape
    local = BoundingBox(box.x - cols.start, box.y - rows.start, box.w, box.h, Frame.of(ww, wh))
    state = evolve(window, init_square(local, params.init_margin), params)
    final = region_means(window, state.u)
    log.debug(
        "acwe: %d iterations, converged=%s, c1=%.4f c2=%.4f",
        state.iteration, state.converged, final.c1, final.c2,
    )
    mask = np.zeros(img.shape, dtype=np.uint8)
    mask[rows, cols] = state.u
    return mask, RunStats(state.iteration, state.converged, final.c1, final.c2)
