import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion."""

    def _record(number, title, passed, detail):
        ACCEPTANCE_LINES[number] = (f"[{'PASS' if passed else 'FAIL'}] criterion "
                                    f"{number:>2} {title}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
