import pytest

# Acceptance checks append (label, passed, detail) here; the lines are echoed at the end of the session.
ACCEPTANCE_LINES: list = []


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
