"""Shared fixtures: acceptance criterion reporting.

Each acceptance test emits exactly one pass/fail line; the lines are
echoed in the terminal summary so they are visible without ``-s``.
"""

import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record and assert one acceptance criterion outcome."""

    def _report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        _LINES.append(line)
        print(line, flush=True)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
