"""Seeded two-level tumor phantoms corrupted by Rician (magnitude) noise."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ParameterError
from .imaging import BoundingBox, Frame


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float

    def extent(self):
        return self.r, self.r

    def contains(self, xx, yy):
        return (xx - self.cx) ** 2 + (yy - self.cy) ** 2 <= self.r**2


@dataclass(frozen=True)
class Square:
    cx: float
    cy: float
    side: float

    def extent(self):
        return self.side / 2, self.side / 2

    def contains(self, xx, yy):
        half = self.side / 2
        return (np.abs(xx - self.cx) <= half) & (np.abs(yy - self.cy) <= half)


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    rx: float
    ry: float

    def extent(self):
        return self.rx, self.ry

    def contains(self, xx, yy):
        return ((xx - self.cx) / self.rx) ** 2 + ((yy - self.cy) / self.ry) ** 2 <= 1.0


_SHAPES = {"disk": Disk, "square": Square, "ellipse": Ellipse}


@dataclass(frozen=True)
class PhantomSpec:
    width: int
    height: int
    shape: Disk | Square | Ellipse
    fg_intensity: float = 0.75
    bg_intensity: float = 0.25
    noise_sigma: float = 0.0
    seed: int = 0

    def validate(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError("phantom frame dims must be positive")
        for v in (self.fg_intensity, self.bg_intensity):
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"intensity {v} outside [0, 1]")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        ex, ey = self.shape.extent()
        if min(ex, ey) <= 0:
            raise ParameterError("shape size must be positive")
        cx, cy = self.shape.cx, self.shape.cy
        if cx - ex < 0 or cy - ey < 0 or cx + ex > self.width - 1 or cy + ey > self.height - 1:
            raise ParameterError(f"{self.shape} does not fit inside {self.width}x{self.height}")

    def to_json(self) -> dict:
        shape = {"kind": type(self.shape).__name__.lower(), **asdict(self.shape)}
        return {
            "frame": [self.width, self.height],
            "shape": shape,
            "fg_intensity": self.fg_intensity,
            "bg_intensity": self.bg_intensity,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PhantomSpec":
        try:
            shape = dict(data["shape"])
            kind = shape.pop("kind")
            if kind not in _SHAPES:
                raise ParameterError(f"unknown phantom shape {kind!r}")
            w, h = data["frame"]
            return cls(
                width=int(w),
                height=int(h),
                shape=_SHAPES[kind](**{k: float(v) for k, v in shape.items()}),
                fg_intensity=float(data.get("fg_intensity", 0.75)),
                bg_intensity=float(data.get("bg_intensity", 0.25)),
                noise_sigma=float(data.get("noise_sigma", 0.0)),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"malformed phantom spec: {exc}") from exc


def rasterize(spec: PhantomSpec) -> np.ndarray:
    """Mask of pixels whose centers fall inside the shape."""
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    return spec.shape.contains(xx.astype(np.float64), yy.astype(np.float64)).astype(np.uint8)


def rician_corrupt(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Magnitude of the signal plus complex Gaussian noise, clipped to [0, 1].

    Uses a Philox counter-based stream so a seed gives the same noise on
    every platform.
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    img = np.asarray(img, dtype=np.float64)
    if sigma == 0:
        return img.copy()
    rng = np.random.Generator(np.random.Philox(seed))
    n = rng.standard_normal((2,) + img.shape) * sigma
    out = np.hypot(img + n[0], n[1])
    return np.clip(out, 0.0, 1.0)


def tight_bbox(mask: np.ndarray) -> BoundingBox:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise ParameterError("empty mask has no bounding box")
    frame = Frame.of(mask.shape[1], mask.shape[0])
    return BoundingBox(
        int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1), frame
    )


def generate(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray, BoundingBox]:
    """Return ``(image, mask, bbox)`` for a phantom spec."""
    spec.validate()
    mask = rasterize(spec)
    clean = np.where(mask == 1, spec.fg_intensity, spec.bg_intensity).astype(np.float64)
    image = rician_corrupt(clean, spec.noise_sigma, spec.seed)
    return image, mask, tight_bbox(mask)


def disk_phantom(
    size: int = 512,
    radius: float = 40,
    center: tuple[float, float] | None = None,
    contrast: float = 0.5,
    sigma: float = 0.1,
    seed: int = 0,
) -> PhantomSpec:
    """Convenience spec: a disk of ``fg = 0.5 + contrast/2`` on ``bg = 0.5 - contrast/2``."""
    cx, cy = center if center is not None else (size / 2, size / 2)
    return PhantomSpec(
        width=size,
        height=size,
        shape=Disk(cx, cy, radius),
        fg_intensity=0.5 + contrast / 2,
        bg_intensity=0.5 - contrast / 2,
        noise_sigma=sigma,
        seed=seed,
    )
