import os
import shutil
from pathlib import Path

import pytest

from gpsmc.smt import Solver

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "benchmarks"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running end-to-end checks")
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.fixture(scope="session")
def solver():
    cmd = os.environ.get("GPSMC_SOLVER", "z3 -in")
    if shutil.which(cmd.split()[0]) is None:
        pytest.skip(f"solver {cmd!r} not found")
    s = Solver()
    yield s
    s.close()


@pytest.fixture(scope="session")
def bench():
    return BENCH


CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or (rep.when != "call" and rep.passed):
        return
    num, title = m.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    if rep.when != "call" and status == "PASS":
        return
    CRITERIA[num] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(CRITERIA):
        status, title, detail = CRITERIA[num]
        tr.write_line(f"[{status}] criterion {num:>2}: {title}" + (f"  ({detail})" if detail else ""))
