import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsmild.spectral import Domain, SpectralVectorField

settings.register_profile(
    "nsmild", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nsmild")

# lines emitted by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def dom2():
    return Domain(2, 2 * math.pi, 16)


@pytest.fixture
def dom3():
    return Domain(3, 2 * math.pi, 8)


def field_from(domain, fn):
    """Vector field from a function of the coordinate arrays returning d components."""
    x = domain.coordinates()
    return SpectralVectorField.from_physical(domain, np.stack(fn(*x)))


def random_field(domain, seed=0, ncomp=None):
    rng = np.random.default_rng(seed)
    ncomp = domain.d if ncomp is None else ncomp
    vals = rng.standard_normal((ncomp,) + domain.shape)
    return SpectralVectorField.from_physical(domain, vals)
