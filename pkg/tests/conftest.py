import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from polymorph.measure import AtomicMeasure

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def measures(draw, max_atoms=6, log_range=3.0):
    k = draw(st.integers(1, max_atoms))
    s = draw(st.lists(st.floats(-log_range, log_range), min_size=k, max_size=k))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    return AtomicMeasure(np.exp(s), w)


@st.composite
def strip_points(draw, vmax=1.0, wmax=5.0):
    v = draw(st.floats(0.0, vmax))
    w = draw(st.floats(-wmax, wmax))
    return complex(v, w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
