import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance_log():
    """Record the one-line verdict of an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
