import numpy as np
import pytest

from polyball.gallery import gallery
from polyball.twist import TwistSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def named():
    return {name: make() for name, make in gallery().items()}


@pytest.fixture(scope="session")
def twisted_pair():
    return TwistSpec((1, 1), {(1, 2): np.array([[1j]])})


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
