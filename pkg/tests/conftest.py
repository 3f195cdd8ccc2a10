"""Collects the acceptance verdicts so they appear in the terminal summary."""
import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """``verdict(criterion, passed, detail)`` records and prints one PASS/FAIL line."""

    def record(criterion, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
        VERDICTS.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
