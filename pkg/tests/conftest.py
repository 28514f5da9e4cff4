import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line; shown in the terminal summary."""
    def record(number, ok, detail):
        VERDICTS.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance")
        for line in VERDICTS:
            terminalreporter.write_line(line)
