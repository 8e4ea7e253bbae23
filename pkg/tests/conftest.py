import math

import numpy as np
import pytest

from flyingcat import kernels
from flyingcat.qcore import ket


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def xi_plus():
    """Even-parity three-qubit state (|000> + |011> + |101> + |110>) / 2."""
    return (ket("000") + ket("011") + ket("101") + ket("110")) / 2


@pytest.fixture
def plus3():
    return np.full(8, 1 / math.sqrt(8), dtype=complex)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


# -- acceptance reporting ----------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "time": 0.0, "parts": 0})
    if rep.when == "call":
        entry["parts"] += 1
        entry["time"] += rep.duration
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {status}  {e['title']} ({e['parts']} check{'s' * (e['parts'] != 1)}, {e['time']:.2f} s)")
