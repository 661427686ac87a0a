import numpy as np
import pytest

from gencs.families import make_family


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[("spin", 2), ("boson", 1), ("fermion", 2)], ids=lambda p: f"{p[0]}{p[1]}")
def family(request):
    return make_family(*request.param)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
