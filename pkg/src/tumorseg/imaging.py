"""Grayscale image and mask handling.

Images are 2D ``float64`` arrays indexed ``[row, col]`` with intensities in
[0, 1]. Masks are 2D ``uint8`` arrays holding 0/1; label maps are 2D arrays of
small non-negative integers. Width is the column count, height the row count.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import FormatError, ParameterError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class Frame:
    """Coordinate frame a bounding box lives in (image width and height)."""

    width: int
    height: int
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError(f"frame dims must be positive, got {self.width}x{self.height}")

    @classmethod
    def of(cls, width: int, height: int) -> "Frame":
        for named in (DOWNSAMPLED128, NATIVE512):
            if (named.width, named.height) == (width, height):
                return named
        return cls(int(width), int(height))

    @classmethod
    def from_json(cls, value) -> "Frame":
        if value == "native512":
            return NATIVE512
        if value == "downsampled128":
            return DOWNSAMPLED128
        if isinstance(value, dict) and "custom" in value:
            w, h = value["custom"]
            return cls.of(int(w), int(h))
        raise ParameterError(f"unrecognised frame {value!r}")

    def to_json(self):
        if self.name in ("native512", "downsampled128"):
            return self.name
        return {"custom": [self.width, self.height]}


DOWNSAMPLED128 = Frame(128, 128, "downsampled128")
NATIVE512 = Frame(512, 512, "native512")


@dataclass(frozen=True)
class BoundingBox:
    """Integer rectangle; ``x``/``y`` are the left column and top row."""

    x: int
    y: int
    w: int
    h: int
    frame: Frame = NATIVE512

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ParameterError(f"box size must be positive, got w={self.w} h={self.h}")
        if (
            self.x < 0
            or self.y < 0
            or self.x + self.w > self.frame.width
            or self.y + self.h > self.frame.height
        ):
            raise ParameterError(
                f"box ({self.x},{self.y},{self.w},{self.h}) exceeds frame "
                f"{self.frame.width}x{self.frame.height}"
            )

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h, "frame": self.frame.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "BoundingBox":
        try:
            return cls(
                int(data["x"]),
                int(data["y"]),
                int(data["w"]),
                int(data["h"]),
                Frame.from_json(data.get("frame", "native512")),
            )
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed bounding box: {exc}") from exc


def frame_of(img: np.ndarray) -> Frame:
    return Frame.of(img.shape[1], img.shape[0])


# ---------------------------------------------------------------------------
# file I/O


def _parse_pgm(raw: bytes) -> np.ndarray:
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte ends the header
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"bad PGM header: {exc}") from exc
    if maxval != 255:
        raise FormatError(f"only 8-bit PGM (maxval 255) is supported, got maxval {maxval}")
    if width <= 0 or height <= 0:
        raise FormatError("PGM dims must be positive")
    data = raw[pos : pos + width * height]
    if len(data) != width * height:
        raise FormatError("PGM pixel data is truncated")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)


def _read_u8(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P5":
        return _parse_pgm(raw)
    if raw[:8] == _PNG_MAGIC:
        try:
            with Image.open(io.BytesIO(raw)) as im:
                if im.mode != "L":
                    raise FormatError(f"only 8-bit grayscale PNG is supported, got mode {im.mode}")
                return np.asarray(im, dtype=np.uint8).copy()
        except FormatError:
            raise
        except Exception as exc:
            raise FormatError(f"unreadable PNG: {exc}") from exc
    raise FormatError(f"{path}: not a binary PGM (P5) or PNG file")


def load_image(path) -> np.ndarray:
    """Read an 8-bit PGM/PNG and return intensities scaled into [0, 1]."""
    return _read_u8(path).astype(np.float64) / 255.0


def load_mask(path) -> np.ndarray:
    """Read a mask file; any nonzero byte is foreground."""
    return (_read_u8(path) > 127).astype(np.uint8)


def encode_u8(pixels: np.ndarray, path) -> bytes:
    """Serialise an 8-bit array as PNG (by ``.png`` suffix) or binary PGM."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if str(path).lower().endswith(".png"):
        buf = io.BytesIO()
        Image.fromarray(pixels).save(buf, format="PNG")
        return buf.getvalue()
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def write_atomic(path, payload: bytes) -> None:
    """Write to a sibling temp file and rename over ``path``."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def mask_bytes(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or not np.isin(mask, (0, 1)).all():
        raise ParameterError("mask must be a 2D array of 0/1 values")
    return mask.astype(np.uint8) * 255


def image_bytes(img: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_mask(mask: np.ndarray, path) -> None:
    """Write a 0/1 mask as an 8-bit image with 1 -> 255."""
    write_atomic(path, encode_u8(mask_bytes(mask), path))


def save_image(img: np.ndarray, path) -> None:
    write_atomic(path, encode_u8(image_bytes(img), path))


def binarize(img: np.ndarray, level: float = 0.5) -> np.ndarray:
    return (np.asarray(img) > level).astype(np.uint8)


# ---------------------------------------------------------------------------
# intensity preprocessing


def _check_nonempty(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ParameterError("expected a non-empty 2D image")
    return img


def normalize(img: np.ndarray) -> np.ndarray:
    """Linear min/max stretch onto [0, 1]; a constant image maps to zeros."""
    img = _check_nonempty(img)
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def intensity_bins(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to the nearest of 256 bins."""
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.intp)


def histogram_equalize(img: np.ndarray) -> np.ndarray:
    """Replace every pixel by the cumulative histogram (256 bins) at its bin."""
    img = _check_nonempty(img)
    bins = intensity_bins(img)
    cdf = np.cumsum(np.bincount(bins.ravel(), minlength=256)) / bins.size
    return cdf[bins]


def contrast_stretch(img: np.ndarray, lo_pct: float = 2.0, hi_pct: float = 98.0) -> np.ndarray:
    """Clip at the given percentiles and stretch the clipped range to [0, 1]."""
    if not 0 <= lo_pct < hi_pct <= 100:
        raise ParameterError(f"need 0 <= lo_pct < hi_pct <= 100, got {lo_pct}, {hi_pct}")
    img = _check_nonempty(img)
    lo, hi = np.percentile(img, [lo_pct, hi_pct])
    if hi <= lo:
        return np.zeros_like(img)
    return (np.clip(img, lo, hi) - lo) / (hi - lo)


def _sample_coords(n_in: int, n_out: int) -> np.ndarray:
    # corner-aligned: first and last samples sit on the first and last input pixel
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resize(img: np.ndarray, new_w: int, new_h: int, mode: str = "bilinear") -> np.ndarray:
    """Resample to ``new_h`` rows by ``new_w`` columns.

    ``bilinear`` is meant for intensities, ``nearest`` for masks (it keeps
    the input dtype and value set).
    """
    if new_w <= 0 or new_h <= 0:
        raise ParameterError(f"target dims must be positive, got {new_w}x{new_h}")
    src = np.asarray(img)
    if src.ndim != 2 or src.size == 0:
        raise ParameterError("expected a non-empty 2D image")
    h, w = src.shape
    ys = _sample_coords(h, new_h)
    xs = _sample_coords(w, new_w)
    if mode == "nearest":
        yi = np.floor(ys + 0.5).astype(np.intp)
        xi = np.floor(xs + 0.5).astype(np.intp)
        return src[np.ix_(yi, xi)].copy()
    if mode != "bilinear":
        raise ParameterError(f"unknown resize mode {mode!r}")
    src = src.astype(np.float64)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def map_bbox(box: BoundingBox, src: Frame, dst: Frame) -> BoundingBox:
    """Rescale a box between frames, rounding half-up and clamping inside ``dst``."""
    if box.frame != src:
        raise ParameterError(f"box is in frame {box.frame}, not {src}")
    sx = dst.width / src.width
    sy = dst.height / src.height
    x = min(max(_round_half_up(box.x * sx), 0), dst.width - 1)
    y = min(max(_round_half_up(box.y * sy), 0), dst.height - 1)
    w = min(max(_round_half_up(box.w * sx), 1), dst.width - x)
    h = min(max(_round_half_up(box.h * sy), 1), dst.height - y)
    return BoundingBox(x, y, w, h, dst)
