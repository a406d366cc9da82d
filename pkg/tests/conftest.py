import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, passed, detail):
        status = "PASS" if passed else "FAIL"
        lines.append((number, f"[{status}] criterion {number:>2}: {detail}"))
        print(lines[-1][1])
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
