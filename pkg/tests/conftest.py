import pytest

CRITERIA = 13
_results: dict[int, tuple[bool, str]] = {}
_ran_acceptance = [False]


@pytest.fixture
def criterion():
    """Record the verdict of one acceptance criterion for the end-of-run summary."""
    _ran_acceptance[0] = True

    def record(k: int, ok: bool, detail: str) -> bool:
        _results[k] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ran_acceptance[0]:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, CRITERIA + 1):
        if k in _results:
            ok, detail = _results[k]
            terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {k:2d}: NOT RUN")
