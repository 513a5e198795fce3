import pytest

_CRITERIA = []


@pytest.fixture
def report_criterion():
    """Record one pass/fail line for the acceptance summary."""

    def record(num: int, ok: bool, detail: str) -> bool:
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append((num, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
