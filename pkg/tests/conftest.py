"""Shared fixtures plus the acceptance-summary hook.

test_acceptance.py records one verdict per criterion through the `record`
fixture; after the run the hook below prints them as a block, one line per
criterion, pass or fail, so the gate is readable without scrolling through
the pytest output.
"""

import pytest

from underlaysim.power_control import ScenarioParams

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


def _record(num: int, title: str, ok: bool, detail: str) -> None:
    _CRITERIA[num] = (title, bool(ok), detail)


@pytest.fixture
def record():
    return _record


@pytest.fixture(scope="session")
def defaults() -> ScenarioParams:
    return ScenarioParams()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[num]
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {num:2d}: {word}  {title}  [{detail}]")
