import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; returns ``ok`` so the test can assert it."""

    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"AC{number:<2} {status}  {title}  ({detail})")
