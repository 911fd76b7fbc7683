"""Backend selection for the level-set kernels.

The compiled extension is used when it imports; otherwise the numpy versions
are used. Set ``TUMORSEG_PURE_PYTHON=1`` to force the numpy backend.
"""

import importlib
import os

from . import _pykernels

_BACKENDS = {"python": "tumorseg._pykernels", "cython": "tumorseg._ckernels"}


def load_backend(name):
    """Import a backend module by name (``"python"`` or ``"cython"``)."""
    return importlib.import_module(_BACKENDS[name])


def available_backends():
    names = []
    for name in _BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


_impl = _pykernels
BACKEND = "python"
if os.environ.get("TUMORSEG_PURE_PYTHON", "") in ("", "0"):
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        pass

sup_inf = _impl.sup_inf
inf_sup = _impl.inf_sup
curvature_smooth = _impl.curvature_smooth
boundary_band = _impl.boundary_band
band_update = _impl.band_update
