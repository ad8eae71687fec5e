from __future__ import annotations

import numpy as np
import pytest

from toposq.scenario_io import preset_model

H = 1 / np.sqrt(2)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([H, H], dtype=complex)
MINUS = np.array([H, -H], dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
PPLUS = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
PMINUS = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
E = [np.diag(row).astype(complex) for row in np.eye(3)]

_MODELS: dict = {}


def model(name: str):
    if name not in _MODELS:
        _MODELS[name] = preset_model(name)
    return _MODELS[name]


@pytest.fixture
def poset_a():
    """Vz and Vx on a qubit, an antichain."""
    return model("qubit-zx").presheaf


@pytest.fixture
def poset_b():
    """diag(E1, E2, E3) on a qutrit with its three coarsenings."""
    return model("qutrit-chain").presheaf


@pytest.fixture
def mermin():
    return model("mermin-square").presheaf


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": 0})
    entry["tests"] += 1
    if not rep.passed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        verdict = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {e['title']} ({e['tests']} tests)")
