import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """``record(label, ok, detail)``: one summary line per criterion."""
    def record(label, ok, detail=""):
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_ACCEPTANCE, key=lambda x: _order(x[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")


def _order(label):
    head = label.split()[0].rstrip("abcdefghijklmnopqrstuvwxyz+")
    return (int(head) if head.isdigit() else 99, label)
