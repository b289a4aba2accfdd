import pytest

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, title, ok, detail)``."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (title, bool(ok), detail)
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
