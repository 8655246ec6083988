import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from credal_ot.credal_core import DiscreteDistribution

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def distributions(draw, min_n=1, max_n=6, n=None):
    size = n if n is not None else draw(st.integers(min_n, max_n))
    w = draw(arrays(np.float64, size, elements=st.floats(0.0, 1.0)))
    if w.sum() <= 1e-6:
        w = np.ones(size)
    return DiscreteDistribution.from_masses(w / w.sum())


epsilons = st.floats(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
