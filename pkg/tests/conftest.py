import pytest

_ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance_log():
    """Acceptance tests record (name, ok, detail) here; a summary section
    prints one pass/fail line per criterion at the end of the run."""
    def record(name, ok, detail=""):
        _ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{status}  {name}{suffix}")
