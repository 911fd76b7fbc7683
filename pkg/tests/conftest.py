import re
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tumorseg import kernels  # noqa: E402

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS, scope="module")
def backend(request):
    return kernels.load_backend(request.param)


@pytest.fixture
def use_backend(monkeypatch, backend):
    """Route the acwe module through the given kernel backend."""
    for name in ("sup_inf", "inf_sup", "curvature_smooth", "boundary_band", "band_update"):
        monkeypatch.setattr(kernels, name, getattr(backend, name))
    return backend


def dice_of(a, b):
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    return 2 * (a & b).sum() / (a.sum() + b.sum())


_AC_RESULTS = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_ac(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _AC_RESULTS.get(key, "PASS")
        ok = report.outcome == "passed" and prev == "PASS"
        _AC_RESULTS[key] = "PASS" if ok else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_AC_RESULTS.items()):
        terminalreporter.write_line(f"[{status}] AC{num} {name}")
