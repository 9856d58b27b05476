import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, failures):
        status = "PASS" if not failures else "FAIL"
        line = f"{status}  criterion {number}: {title}"
        if failures:
            line += "  [" + "; ".join(failures) + "]"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert not failures, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
