import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(pytestconfig):
    """Record one pass/fail line per acceptance criterion."""
    lines = pytestconfig.stash.setdefault(_KEY, [])

    def report(number, title, ok, detail=""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
