"""
Core objects for the Hellmann potential problem.

Units, potential parameters, quantum-state indexing, the potential itself and the
special functions (associated Laguerre polynomials, normalized Coulomb radial
wavefunctions) that the perturbation, quadrature and oracle engines consume.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_genlaguerre

from src.utils.errors import NoBoundStateError, ParameterError, SingularDenominatorError

logger = logging.getLogger(__name__)

# Spectroscopic letters for l = 0, 1, 2, ... ("j" is skipped by convention)
ORBITAL_LETTERS = "spdfghiklmnoqrtuv"


@dataclass(frozen=True)
class UnitSystem:
    """
    Action constant and particle mass.

    The default (hbar=1, mass=1/2) gives hbar^2 / (2 mass) = 1, the convention of the
    published Hellmann tables.

    Args:
        hbar (float): Reduced Planck constant
        mass (float): Particle mass
    """

    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ParameterError(f"hbar and mass must be positive, got hbar={self.hbar}, mass={self.mass}")

    @property
    def kinetic(self):
        """float: hbar^2 / (2 mass), the coefficient of -d^2/dr^2."""
        return self.hbar ** 2 / (2.0 * self.mass)

    def is_default(self):
        return self.hbar == 1.0 and self.mass == 0.5

    def to_dict(self):
        return {"hbar": self.hbar, "mass": self.mass}


DEFAULT_UNITS = UnitSystem()


def check_units(units=DEFAULT_UNITS):
    """
    Check the unit identities the closed forms are usually quoted with.

    For the default unit system hbar^2/2m = 1, hbar^2/m = 2, hbar^4/m^2 = 4 and
    hbar^6/m^3 = 8 must hold exactly. Other unit systems are accepted and only logged.

    Args:
        units (UnitSystem): Unit system to check

    Returns:
        dict: The four ratios keyed by name
    """
    h, m = units.hbar, units.mass
    ratios = {
        "hbar2_over_2m": h ** 2 / (2 * m),
        "hbar2_over_m": h ** 2 / m,
        "hbar4_over_m2": h ** 4 / m ** 2,
        "hbar6_over_m3": h ** 6 / m ** 3,
    }
    if units.is_default():
        expected = {"hbar2_over_2m": 1.0, "hbar2_over_m": 2.0, "hbar4_over_m2": 4.0, "hbar6_over_m3": 8.0}
        for key, value in expected.items():
            if not math.isclose(ratios[key], value, rel_tol=1e-15):
                raise ParameterError(f"Unit identity {key} = {value} violated: {ratios[key]}")
    else:
        logger.info(f"Non-default units: hbar^2/2m = {ratios['hbar2_over_2m']:.6g}")
    return ratios


@dataclass(frozen=True)
class PotentialParams:
    """
    Parameters of V(r) = -a/r + b exp(-delta r)/r.

    a = 0 is the static screened Coulomb potential (SSCP), which only the direct
    eigenvalue solver can handle. The a != b requirement of the perturbative formulas
    is enforced by `require_perturbative`, not here.

    Args:
        a (float): Coulomb strength, a >= 0
        b (float): Yukawa strength, any sign
        delta (float): Screening parameter, delta >= 0
    """

    a: float
    b: float
    delta: float

    def __post_init__(self):
        if self.a < 0:
            raise ParameterError(f"Coulomb strength a must be non-negative, got {self.a}")
        if self.delta < 0:
            raise ParameterError(f"Screening parameter delta must be non-negative, got {self.delta}")

    @classmethod
    def sscp(cls, alpha_z, delta):
        """Static screened Coulomb potential -(alpha Z) exp(-delta r)/r."""
        return cls(a=0.0, b=-alpha_z, delta=delta)

    @property
    def net_strength(self):
        """float: a - b, the Coulomb strength left once the screening is switched off."""
        return self.a - self.b

    def require_bound(self):
        """Raise NoBoundStateError unless a > b."""
        if self.a <= self.b:
            raise NoBoundStateError(f"No Coulomb bound states for a <= b (a={self.a}, b={self.b})")

    def require_perturbative(self):
        """Raise unless the perturbative denominators (a - b)^k are usable and attractive."""
        if self.a == self.b:
            raise SingularDenominatorError(f"a == b == {self.a}: perturbative denominators vanish")
        self.require_bound()

    def to_dict(self):
        return {"a": self.a, "b": self.b, "delta": self.delta}


@dataclass(frozen=True)
class QuantumState:
    """
    Radial quantum number n (node count) and orbital angular momentum l.

    Args:
        n (int): Radial quantum number, n >= 0
        l (int): Orbital angular momentum, l >= 0
    """

    n: int
    l: int

    def __post_init__(self):
        if self.n < 0 or self.l < 0 or int(self.n) != self.n or int(self.l) != self.l:
            raise ParameterError(f"Quantum numbers must be non-negative integers, got n={self.n}, l={self.l}")

    @property
    def L(self):
        return self.l * (self.l + 1)

    @property
    def principal(self):
        """int: N_n = n + l + 1."""
        return self.n + self.l + 1

    @property
    def principal_next(self):
        """int: N_{n+1} = n + l + 2."""
        return self.n + self.l + 2

    @property
    def label(self):
        if self.l >= len(ORBITAL_LETTERS):
            return f"{self.principal}[l={self.l}]"
        return f"{self.principal}{ORBITAL_LETTERS[self.l]}"

    @classmethod
    def parse(cls, label):
        """
        Parse a spectroscopic label such as "4f" into (n=0, l=3).

        Args:
            label (str): Principal quantum number followed by an orbital letter

        Returns:
            QuantumState: The parsed state
        """
        text = str(label).strip().lower()
        if len(text) < 2 or not text[:-1].isdigit() or text[-1] not in ORBITAL_LETTERS:
            raise ParameterError(f"Invalid spectroscopic label '{label}'")
        principal = int(text[:-1])
        l = ORBITAL_LETTERS.index(text[-1])
        n = principal - l - 1
        if n < 0:
            raise ParameterError(f"Invalid spectroscopic label '{label}': l must be below N")
        return cls(n=n, l=l)

    def __str__(self):
        return self.label


def states_in_shell(principal):
    """All states with n + l + 1 == principal, ordered by increasing l."""
    return [QuantumState(n=principal - l - 1, l=l) for l in range(principal)]


def states_up_to(max_sum):
    """All states with n + l <= max_sum, ordered by shell then l."""
    return [state for shell in range(1, max_sum + 2) for state in states_in_shell(shell)]


@dataclass(frozen=True)
class ExpansionCoefficients:
    """
    Taylor coefficients V_i of exp(-delta r)/r about delta = 0, after factoring b/r.

    Args:
        order (int): Number of terms kept in the screening series
    """

    order: int = 4
    v: tuple = field(init=False)

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError(f"Expansion order must be >= 1, got {self.order}")
        object.__setattr__(
            self, "v", tuple((-1) ** (i + 1) / math.factorial(i) for i in range(1, self.order + 1))
        )

    def delta_v(self, b, delta, r):
        """
        Truncated perturbation Delta V(r) = -b delta sum_i V_i (delta r)^(i-1).

        Args:
            b (float): Yukawa strength
            delta (float): Screening parameter
            r (float or ndarray): Radius

        Returns:
            float or ndarray: Delta V at r
        """
        x = delta * np.asarray(r, dtype=float)
        total = np.zeros_like(x)
        for coefficient in reversed(self.v):
            total = total * x + coefficient
        result = -b * delta * total
        return float(result) if np.ndim(result) == 0 else result


def _as_radius(r, allow_zero=False):
    arr = np.asarray(r, dtype=float)
    bad = arr < 0 if allow_zero else arr <= 0
    if np.any(bad) or np.any(~np.isfinite(arr)):
        raise ParameterError(f"Radius must be {'non-negative' if allow_zero else 'positive'} and finite")
    return arr


def _scalar(result):
    return float(result) if np.ndim(result) == 0 else result


def hellmann_potential(params, r):
    """
    Evaluate V(r) = -a/r + b exp(-delta r)/r.

    Args:
        params (PotentialParams): Potential parameters
        r (float or ndarray): Radius, strictly positive

    Returns:
        float or ndarray: Potential energy
    """
    rr = _as_radius(r)
    return _scalar((-params.a + params.b * np.exp(-params.delta * rr)) / rr)


def effective_potential(params, state, r, units=DEFAULT_UNITS):
    """Hellmann potential plus the centrifugal barrier hbar^2 l(l+1)/(2 m r^2)."""
    rr = _as_radius(r)
    return _scalar(hellmann_potential(params, rr) + units.kinetic * state.L / rr ** 2)


def split_potential(params, r, order=4):
    """
    Split the potential into the Coulomb part and the truncated screening series.

    Args:
        params (PotentialParams): Potential parameters
        r (float or ndarray): Radius, strictly positive
        order (int): Number of series terms kept in Delta V

    Returns:
        tuple: (V0, Delta V) with V0 = -(a - b)/r
    """
    rr = _as_radius(r)
    v0 = -params.net_strength / rr
    dv = ExpansionCoefficients(order).delta_v(params.b, params.delta, rr)
    return _scalar(v0), dv


def laguerre(n, k, x):
    """
    Associated Laguerre polynomial L_n^k(x) by the three-term recurrence.

    (m+1) L_{m+1} = (2m + k + 1 - x) L_m - (m + k) L_{m-1}

    Args:
        n (int): Degree, n >= 0
        k (int): Order, k >= 0
        x (float or ndarray): Argument

    Returns:
        float or ndarray: L_n^k(x)
    """
    if n < 0 or k < 0:
        raise ParameterError(f"Laguerre indices must be non-negative, got n={n}, k={k}")
    x = np.asarray(x, dtype=float)
    previous = np.ones_like(x)
    if n == 0:
        return _scalar(previous)
    current = 1.0 + k - x
    for m in range(1, n):
        previous, current = current, ((2 * m + k + 1 - x) * current - (m + k) * previous) / (m + 1)
    return _scalar(current)


def laguerre_sum(n, k, x):
    """L_n^k(x) from the explicit factorial sum; slow, kept as a reference for the recurrence."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for m in range(n + 1):
        coefficient = (-1) ** m * math.factorial(n + k) / (
            math.factorial(n - m) * math.factorial(m + k) * math.factorial(m)
        )
        total = total + coefficient * x ** m
    return _scalar(total)


@dataclass(frozen=True)
class CoulombWavefunction:
    """
    Normalized Coulomb radial function chi(r) = N r^(l+1) exp(-beta r) L_n^(2l+1)(2 beta r).

    Args:
        state (QuantumState): The state
        beta (float): Inverse length m (a - b) / (N_n hbar^2)
        log_norm (float): Natural log of the normalization constant
    """

    state: QuantumState
    beta: float
    log_norm: float

    @classmethod
    def from_params(cls, params, state, units=DEFAULT_UNITS):
        params.require_bound()
        principal = state.principal
        beta = units.mass * params.net_strength / (principal * units.hbar ** 2)
        # (2 beta)^(l+1) sqrt(beta n! / (N (n + 2l + 1)!))
        log_norm = (state.l + 1) * math.log(2.0 * beta) + 0.5 * (
            math.log(beta) + gammaln(state.n + 1) - math.log(principal) - gammaln(state.n + 2 * state.l + 2)
        )
        return cls(state=state, beta=beta, log_norm=float(log_norm))

    @property
    def norm(self):
        return math.exp(self.log_norm)

    def __call__(self, r):
        rr = _as_radius(r, allow_zero=True)
        safe = np.where(rr > 0, rr, 1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            polynomial = laguerre(self.state.n, 2 * self.state.l + 1, 2.0 * self.beta * rr)
            envelope = np.exp(self.log_norm + (self.state.l + 1) * np.log(safe) - self.beta * rr)
            values = envelope * polynomial
        # exp underflow far out must win over polynomial overflow
        return _scalar(np.where((rr > 0) & (envelope > 0), values, 0.0))

    def node_positions(self):
        """Radii of the n nodes on (0, inf), in increasing order."""
        if self.state.n == 0:
            return np.array([])
        roots, _ = roots_genlaguerre(self.state.n, 2 * self.state.l + 1)
        return np.sort(roots) / (2.0 * self.beta)


def coulomb_chi(params, state, r, units=DEFAULT_UNITS):
    """
    Evaluate the normalized Coulomb radial wavefunction of the unperturbed problem.

    Args:
        params (PotentialParams): Potential parameters, a > b required
        state (QuantumState): The state
        r (float or ndarray): Radius, r >= 0
        units (UnitSystem): Unit system

    Returns:
        float or ndarray: chi(r)
    """
    return CoulombWavefunction.from_params(params, state, units)(r)
