import math
import re

import pytest

from rdtool.models import make_model
from rdtool.spectral import Grid1D, principal_eigenpair

_CRITERIA: dict[int, tuple[str, str]] = {}
_CRIT_RE = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.fixture(scope="session")
def grid_pi():
    return Grid1D(math.pi, 64)


@pytest.fixture(scope="session")
def pair_pi(grid_pi):
    return principal_eigenpair(grid_pi)


@pytest.fixture(scope="session")
def logistic():
    return make_model("logistic", kappa=1.0, A=0.5, B=0.4)


@pytest.fixture(scope="session")
def nicholson():
    return make_model("nicholson", chi=0.8, theta=1.0, nu=0.6)


def pytest_runtest_logreport(report):
    m = _CRIT_RE.search(report.nodeid)
    if m is None or "test_acceptance" not in report.nodeid:
        return
    num, name = int(m.group(1)), m.group(2)
    if report.when == "call" or (report.when == "setup" and report.failed):
        _CRITERIA[num] = (name, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, status = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d} {name.replace('_', ' ')}: {status}")
