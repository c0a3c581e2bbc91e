import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lorentzian_eikonal import CauchySurface, InitialDatum, Spacetime

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

A = 0.75
ROOT = np.sqrt(1 + A * A)


@pytest.fixture(scope="session")
def mink():
    return Spacetime.minkowski(2)


@pytest.fixture(scope="session")
def conformal():
    return Spacetime.conformally_flat("1 + 0.1*t", 2)


@pytest.fixture(scope="session")
def flat_surface(mink):
    return CauchySurface.over(mink, 1.0, InitialDatum.constant(0.0))


@pytest.fixture(scope="session")
def linear_surface(mink):
    return CauchySurface.over(mink, 1.0, InitialDatum.linear([A]))


def linear_exact(P):
    P = np.asarray(P, float)
    return A * P[..., 1] + (P[..., 0] - 1.0) * ROOT


ACCEPTANCE_LINES = []


def record(number, passed, detail):
    """Log one acceptance verdict; the lines are echoed in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
