import pytest

# PASS/FAIL lines from the acceptance suite, echoed after the run
_verdicts = []


@pytest.fixture
def verdict():
    def record(number, ok, detail=""):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _verdicts.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_verdicts):
            terminalreporter.write_line(line)
