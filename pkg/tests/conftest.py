import pytest

_LINES: list = []


@pytest.fixture
def report():
    """report(label, ok, detail) prints one acceptance line and keeps it for the summary."""
    def _report(label: str, ok: bool, detail: str):
        line = f"{label}: {'PASS' if ok else 'FAIL'} | {detail}"
        _LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
