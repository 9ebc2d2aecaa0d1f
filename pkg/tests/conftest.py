import numpy as np
import pytest

from rydprep.basis import LatticeSpec, basis_state
from rydprep.propagate import evolve
from rydprep.pulse import paper_default_schedule
from rydprep.spectrum import gap_trace, spectrum_trace


@pytest.fixture(scope="session")
def spec7():
    return LatticeSpec.standard(7)


@pytest.fixture(scope="session")
def schedule7():
    return paper_default_schedule()


@pytest.fixture(scope="session")
def run7(spec7, schedule7):
    """Reference N=7 trajectory from the empty chain, 400 snapshots."""
    return evolve(spec7, schedule7, basis_state(spec7, 0), 400)


@pytest.fixture(scope="session")
def trace7(run7, spec7, schedule7):
    return spectrum_trace(spec7, schedule7, run7.times, 6)


@pytest.fixture(scope="session")
def gap7(spec7, schedule7):
    return gap_trace(spec7, schedule7, 200)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
