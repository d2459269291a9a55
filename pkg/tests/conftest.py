import sys
from pathlib import Path

import pytest

# the scalar SMD oracle lives next to the tests
sys.path.insert(0, str(Path(__file__).parent))

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion."""
    return request.config.stash.setdefault(_LINES_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
