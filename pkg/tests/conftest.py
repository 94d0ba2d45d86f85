import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rissim.propagation import PropagationParams
from rissim.scene import canonical_scene


@pytest.fixture(scope="session")
def canonical():
    return canonical_scene()


@pytest.fixture(scope="session")
def params():
    return PropagationParams()


# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
N_CRITERIA = 9


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        passed, detail = ACCEPTANCE.get(n, (False, "not run or aborted before a verdict"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} ({detail})")
