import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line; lines are printed now and again in the terminal summary."""

    def emit(criterion: int, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion:>2}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
