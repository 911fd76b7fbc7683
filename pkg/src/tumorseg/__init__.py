"""Bounding-box seeded tumor segmentation toolkit.

Modules
-------
imaging
    Image/mask I/O, bounding boxes and the preprocessing chain.
phantoms
    Seeded synthetic tumor phantoms with Rician noise.
acwe
    Morphological Chan-Vese (active contours without edges).
edges
    Prewitt/Sobel gradient baseline segmentation.
rpn
    Region proposal box math: anchors, IoU labeling, losses, ROI pooling.
metrics
    Segmentation and classification quality measures.
kernels
    Hot inner loops; compiled when available, numpy otherwise.
"""

from .errors import EmptyBoundaryError, FormatError, ParameterError, TumorSegError
from .imaging import BoundingBox, Frame, DOWNSAMPLED128, NATIVE512

__all__ = [
    "BoundingBox",
    "DOWNSAMPLED128",
    "EmptyBoundaryError",
    "FormatError",
    "Frame",
    "NATIVE512",
    "ParameterError",
    "TumorSegError",
]

__version__ = "0.1.0"
