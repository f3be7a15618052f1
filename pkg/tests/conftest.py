"""
Shared fixtures for the Hellmann toolkit tests.
"""

import pytest

from src.models.core import DEFAULT_UNITS, PotentialParams, QuantumState, UnitSystem, states_up_to
from src.models.oracle import SolverConfig

LOW_STATES = ("1s", "2s", "2p", "3s", "3p", "3d")
SHELL4_STATES = LOW_STATES + ("4s", "4p", "4d", "4f")


@pytest.fixture
def units():
    return DEFAULT_UNITS


@pytest.fixture
def atomic_units():
    """hbar = m = 1, a non-default unit system."""
    return UnitSystem(hbar=1.0, mass=1.0)


@pytest.fixture
def strong_screening():
    """a = 2, b = -10, delta = 0.1: the first published table at delta = 0.1."""
    return PotentialParams(a=2.0, b=-10.0, delta=0.1)


@pytest.fixture
def weak_screening():
    return PotentialParams(a=2.0, b=-1.0, delta=0.01)


@pytest.fixture
def coulomb():
    return PotentialParams(a=2.0, b=0.0, delta=0.0)


@pytest.fixture
def low_states():
    return [QuantumState.parse(label) for label in LOW_STATES]


@pytest.fixture
def shell4_states():
    return [QuantumState.parse(label) for label in SHELL4_STATES]


@pytest.fixture
def quadrature_states():
    """All states with n + l <= 5."""
    return states_up_to(5)


@pytest.fixture
def normalization_states():
    """All states with n + l <= 6, 1s through 7i."""
    return states_up_to(6)


@pytest.fixture
def fast_solver():
    """Reduced grid for tests; the asserted tolerances stay well above its error."""
    return SolverConfig(grid_points=4000, energy_tol=1e-7)
