import sys
from pathlib import Path

import pytest

from flatkit.system import load_system

ROOT = Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def academic():
    return load_system(SYSTEMS / "academic.sys")


@pytest.fixture(scope="session")
def robot_exact():
    return load_system(SYSTEMS / "robot_exact.sys")


@pytest.fixture(scope="session")
def robot_transformed():
    return load_system(SYSTEMS / "robot_exact_transformed.sys")


@pytest.fixture(scope="session")
def robot_euler():
    return load_system(SYSTEMS / "robot_euler.sys")


# ------------------------------------------------ acceptance criteria report

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    key, title = mark.args
    _, ok, secs = _CRITERIA.get(key, (title, True, 0.0))
    _CRITERIA[key] = (title, ok and rep.passed, secs + rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.rstrip("abcde")), k)):
        title, ok, secs = _CRITERIA[key]
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {key:<3} {title} ({secs:.1f} s)")
