import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def record():
    """record(n, ok, text): one summary line per acceptance criterion."""

    def _record(n: int, ok: bool, text: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        CRITERIA[n] = line
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
