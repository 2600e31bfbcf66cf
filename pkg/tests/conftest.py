from __future__ import annotations

import pytest

from credchain.agent import Agent
from credchain.crypto import kernel

_ACCEPTANCE: list[tuple[int, str, str]] = []


@pytest.fixture
def agent(tmp_path):
    return Agent(tmp_path / "agent")


@pytest.fixture(params=sorted(kernel.BACKENDS))
def backend(request):
    """Run a test once per available kernel backend."""
    previous = kernel.BACKEND
    kernel.set_backend(request.param)
    yield request.param
    kernel.set_backend(previous)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        _ACCEPTANCE.append((number, title, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}")
