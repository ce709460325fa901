import os

os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np
import pytest

from trion import FieldParams
from trion.saddles import saddle_c2v, saddle_c3v


@pytest.fixture(scope="session")
def c3v_saddle():
    return saddle_c3v(1.0)


@pytest.fixture(scope="session")
def c2v_saddle():
    return saddle_c2v(1.0)


@pytest.fixture(scope="session")
def experiment_field():
    """Pulse of the modeled experiment: 795 nm, 1.5 PW/cm^2, 20-cycle sin^2."""
    return FieldParams.from_cycles(F=0.207, omega=0.057, cycles=20)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
