import numpy as np
import pytest

from unstable_filter import linalg
from unstable_filter.coupled import build_model, log_grid
from unstable_filter.params import derive_rates, nominal_filter, nominal_ifo

BACKENDS = ["python"] + (["cython"] if linalg.HAVE_EXTENSION else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def filt():
    return nominal_filter()


@pytest.fixture
def ifo():
    return nominal_ifo()


@pytest.fixture
def rates(filt, ifo):
    return derive_rates(filt, ifo)


@pytest.fixture
def model(rates):
    return build_model(rates)


@pytest.fixture
def grid():
    return log_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
