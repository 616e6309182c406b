import pytest

_ACCEPTANCE = []


class AcceptanceLog:
    def record(self, label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
