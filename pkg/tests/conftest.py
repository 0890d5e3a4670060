import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sddgalerkin import Domain, build_basis

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def pi_domain():
    return Domain(math.pi, 48)


@pytest.fixture
def pi_basis(pi_domain):
    return build_basis(pi_domain, 16)


def ref_segment(modes, r, dt):
    """Smooth reference data (1, -1/2, 1/4, 0, ...) held constant in theta."""
    from sddgalerkin import InitialSegment

    a = np.zeros(modes)
    a[:3] = (1.0, -0.5, 0.25)
    return InitialSegment.constant(a, r, dt)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
