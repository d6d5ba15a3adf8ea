import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line acceptance verdict for the terminal summary."""
    def add(line):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
