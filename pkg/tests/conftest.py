import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from branchfilter.fixtures import FIXTURES  # noqa: E402


@pytest.fixture(params=FIXTURES, ids=lambda f: f.name)
def fixture(request):
    return request.param


_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
