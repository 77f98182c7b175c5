import pytest

_LINES = {}


@pytest.fixture
def report():
    """Record and print a one-line verdict for an acceptance criterion."""
    def _report(number, title, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title} ({detail})"
        _LINES[number] = line
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
