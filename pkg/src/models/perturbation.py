"""
Closed-form perturbation theory for the Hellmann potential.

The Coulomb part -(a - b)/r is solved exactly and the screening series
Delta V(r) = -b delta + b delta^2 r / 2 - b delta^3 r^2 / 6 + b delta^4 r^3 / 24
is treated through third order in the superpotential hierarchy.
"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad

from src.models.core import DEFAULT_UNITS, CoulombWavefunction, QuantumState, check_units
from src.utils.errors import ParameterError, QuadratureError, UnsupportedStateError

logger = logging.getLogger(__name__)

TRUST_THRESHOLD = 1.0
HIGH_CONFIDENCE_THRESHOLD = 0.1


@dataclass(frozen=True)
class EnergyBreakdown:
    """
    Perturbative energy of one state, term by term.

    Args:
        e0 (float): Zeroth-order (Coulomb) energy
        const_shift (float): Constant shift -b delta
        e1 (float): First-order correction
        e2 (float): Second-order correction
        e3 (float): Third-order correction
        total (float): e0 + const_shift + e1 + e2 + e3, summed in that order
    """

    e0: float
    const_shift: float
    e1: float
    e2: float
    e3: float
    total: float

    @classmethod
    def assemble(cls, e0, const_shift, e1, e2, e3):
        total = e0
        total += const_shift
        total += e1
        total += e2
        total += e3
        return cls(e0=e0, const_shift=const_shift, e1=e1, e2=e2, e3=e3, total=total)

    @property
    def binding(self):
        return -self.total

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SuperpotentialTerms:
    """
    Polynomial coefficients of the superpotential and its first two corrections.

    W_n(r) = w0_inv_r / r + w0_const, W^(1)(r) = w1_linear r and
    W^(2)(r) = w2_quadratic r^2 + w2_linear r. The Coulomb W_n is exact for n = 0 only.
    """

    w0_inv_r: float
    w0_const: float
    w1_linear: float
    w2_quadratic: float
    w2_linear: float

    def w1(self, r):
        return self.w1_linear * np.asarray(r, dtype=float)

    def w2(self, r):
        r = np.asarray(r, dtype=float)
        return (self.w2_quadratic * r + self.w2_linear) * r

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GroundStateModerator:
    """
    Moderating polynomial P(r) = p2 r^2 + p3 r^3 of the ground-state wavefunction.

    Args:
        p2 (float): Quadratic coefficient
        p3 (float): Cubic coefficient
        c (float): Auxiliary constant shared by p2 and p3
    """

    p2: float
    p3: float
    c: float

    def exponent(self, r):
        r = np.asarray(r, dtype=float)
        return (self.p3 * r + self.p2) * r * r

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceReport:
    """
    Ratios of successive perturbative terms and the resulting trust flags.

    `shift_ratio` compares the order-delta constant shift with the unperturbed energy,
    the remaining ratios compare each correction with the term before it.
    """

    state: str
    breakdown: EnergyBreakdown
    shift_ratio: float
    e1_ratio: float
    e2_ratio: float
    e3_ratio: float
    trusted: bool
    high_confidence: bool

    @property
    def ratios(self):
        return {
            "shift/e0": self.shift_ratio,
            "e1/e0": self.e1_ratio,
            "e2/e1": self.e2_ratio,
            "e3/e2": self.e3_ratio,
        }

    def to_dict(self):
        return {
            "state": self.state,
            "breakdown": self.breakdown.to_dict(),
            "ratios": self.ratios,
            "trusted": self.trusted,
            "high_confidence": self.high_confidence,
        }


def zeroth_order_energy(params, state, units=DEFAULT_UNITS):
    """
    Exact Coulomb energy -m (a - b)^2 / (2 hbar^2 N_n^2).

    Args:
        params (PotentialParams): Potential parameters, a > b
        state (QuantumState): The state
        units (UnitSystem): Unit system

    Returns:
        float: Zeroth-order energy
    """
    params.require_perturbative()
    return -units.mass * params.net_strength ** 2 / (2.0 * units.hbar ** 2 * state.principal ** 2)


def _shifts_from_polynomials(params, units, principal, first, second, second_plus, third):
    """
    Assemble (e1, e2, e3) from the state polynomials.

    Args:
        first (float): 3N^2 - L
        second (float): 5N^2 - 3L
        second_plus (float): 5N^2 - 3L + 1
        third (float): 9N^2 - 5L
    """
    h, m = units.hbar, units.mass
    b, d, A = params.b, params.delta, params.net_strength
    N2 = principal ** 2
    e1 = h ** 2 * b * first * d ** 2 / (4.0 * A * m)
    e2 = (
        -h ** 4 * b * N2 * second_plus * d ** 3 / (12.0 * A ** 2 * m ** 2)
        - h ** 6 * b ** 2 * N2 ** 2 * second_plus * d ** 4 / (16.0 * A ** 4 * m ** 3)
    )
    e3 = (
        h ** 6 * b * N2 * second * second_plus * d ** 4 / (96.0 * A ** 3 * m ** 3)
        + h ** 8 * b ** 2 * N2 ** 2 * second_plus * third * d ** 5 / (48.0 * A ** 5 * m ** 4)
        + h ** 10 * b ** 3 * N2 ** 3 * second_plus * third * d ** 6 / (64.0 * A ** 7 * m ** 5)
    )
    return e1, e2, e3


def energy_shifts(params, state, units=DEFAULT_UNITS):
    """
    First, second and third order energy corrections for any state.

    Args:
        params (PotentialParams): Potential parameters, a > b
        state (QuantumState): The state
        units (UnitSystem): Unit system

    Returns:
        tuple: (e1, e2, e3)
    """
    params.require_perturbative()
    N2, L = state.principal ** 2, state.L
    return _shifts_from_polynomials(
        params, units, state.principal, 3 * N2 - L, 5 * N2 - 3 * L, 5 * N2 - 3 * L + 1, 9 * N2 - 5 * L
    )


# Radial ground state and first two radial excitations written out in l.
# N_0 = l + 1, N_1 = l + 2, N_2 = l + 3.

def shifts_n0(params, l, units=DEFAULT_UNITS):
    params.require_perturbative()
    return _shifts_from_polynomials(
        params, units, l + 1,
        (l + 1) * (2 * l + 3),
        (l + 1) * (2 * l + 5),
        (l + 2) * (2 * l + 3),
        (l + 1) * (4 * l + 9),
    )


def shifts_n1(params, l, units=DEFAULT_UNITS):
    # The printed n = 1 third-order term lacks b^3; the general form carries it.
    params.require_perturbative()
    return _shifts_from_polynomials(
        params, units, l + 2,
        (l + 4) * (2 * l + 3),
        2 * l * l + 17 * l + 20,
        (2 * l + 3) * (l + 7),
        4 * l * l + 31 * l + 36,
    )


def shifts_n2(params, l, units=DEFAULT_UNITS):
    params.require_perturbative()
    return _shifts_from_polynomials(
        params, units, l + 3,
        2 * l * l + 17 * l + 27,
        2 * l * l + 27 * l + 45,
        (l + 2) * (2 * l + 23),
        4 * l * l + 49 * l + 81,
    )


SPECIALIZED_SHIFTS = {0: shifts_n0, 1: shifts_n1, 2: shifts_n2}


def total_energy(params, state, units=DEFAULT_UNITS):
    """
    Total perturbative energy e0 - b delta + e1 + e2 + e3.

    Returns:
        EnergyBreakdown: Term-by-term energy
    """
    e0 = zeroth_order_energy(params, state, units)
    e1, e2, e3 = energy_shifts(params, state, units)
    return EnergyBreakdown.assemble(e0, -params.b * params.delta, e1, e2, e3)


def superpotential_terms(params, state, units=DEFAULT_UNITS):
    """
    Coefficients of W_n, W^(1) and W^(2) for the given state.

    Args:
        params (PotentialParams): Potential parameters, a > b
        state (QuantumState): The state
        units (UnitSystem): Unit system

    Returns:
        SuperpotentialTerms: Polynomial coefficients
    """
    params.require_perturbative()
    h, m = units.hbar, units.mass
    b, d, A = params.b, params.delta, params.net_strength
    N, N_next = state.principal, state.principal_next
    root2m = math.sqrt(2.0 * m)

    shared = (3.0 * h ** 2 * b ** 2 * N ** 2 * d + 4.0 * m * b * A ** 2) * d ** 3 / (
        24.0 * root2m * m ** 2 * A ** 4
    )
    return SuperpotentialTerms(
        w0_inv_r=-h * (state.l + 1) / root2m,
        w0_const=math.sqrt(m / 2.0) * A / (N * h),
        w1_linear=h * b * N * d ** 2 / (2.0 * root2m * A),
        w2_quadratic=-h * N * A * m * shared,
        w2_linear=-h ** 3 * N ** 2 * N_next * shared,
    )


def ground_state_moderator(params, l, units=DEFAULT_UNITS):
    """
    Coefficients p2, p3 and c of the ground-state moderating polynomial.

    Args:
        params (PotentialParams): Potential parameters, a > b
        l (int): Orbital angular momentum
        units (UnitSystem): Unit system

    Returns:
        GroundStateModerator: The coefficients
    """
    params.require_perturbative()
    h, m = units.hbar, units.mass
    b, d, A = params.b, params.delta, params.net_strength
    N0, N1 = l + 1, l + 2
    c = N0 * d * (3.0 * h ** 2 * b * N0 ** 2 * d + 4.0 * m * A ** 2) / (12.0 * m * A ** 3)
    p2 = b * N0 * d ** 2 / (4.0 * A) * (N1 * h ** 2 * c / m - 1.0)
    p3 = b * c * d ** 2 / 6.0
    return GroundStateModerator(p2=p2, p3=p3, c=c)


def moderating_factor(moderator, r):
    """u(r) = exp(P(r)); inf where P overflows."""
    with np.errstate(over="ignore"):
        result = np.exp(moderator.exponent(r))
    return float(result) if np.ndim(result) == 0 else result


def validity_radius(moderator, beta):
    """
    Smallest radius beyond which the moderated exponent -beta r + P(r) grows.

    Args:
        moderator (GroundStateModerator): Moderating coefficients
        beta (float): Coulomb decay constant

    Returns:
        float or None: Radius where d/dr(-beta r + P) = 0, None if it never vanishes
    """
    coefficients = np.trim_zeros([3.0 * moderator.p3, 2.0 * moderator.p2, -beta], "f")
    if len(coefficients) < 2:
        return None
    roots = np.roots(coefficients)
    positive = [root.real for root in roots if abs(root.imag) < 1e-12 * max(1.0, abs(root.real)) and root.real > 0]
    return min(positive) if positive else None


def ground_state_wavefunction(params, l, r, units=DEFAULT_UNITS, normalize=False, n=0, with_mask=False):
    """
    Moderated ground-state wavefunction N r^(l+1) exp(-beta r + P(r)).

    The Coulomb exponent and P(r) are combined in a single exponential. The moderated
    function is not normalized; `normalize=True` rescales it by its numerical norm over
    the range where it decays.

    Past the validity radius the exponent grows and psi diverges: such samples are
    logged as a warning and flagged in the mask. Samples whose exponent exceeds the
    floating-point range come back as inf.

    Args:
        params (PotentialParams): Potential parameters, a > b
        l (int): Orbital angular momentum
        r (float or ndarray): Radius, r >= 0
        units (UnitSystem): Unit system
        normalize (bool): Rescale to unit norm
        n (int): Radial quantum number, only 0 is supported
        with_mask (bool): Also return the per-sample validity flags

    Returns:
        float or ndarray: psi(r), or (psi, valid) with `with_mask`, valid being
        True where r lies within the validity radius
    """
    if n != 0:
        raise UnsupportedStateError(f"Moderated wavefunction is only available for n = 0, got n = {n}")
    params.require_perturbative()
    chi = CoulombWavefunction.from_params(params, QuantumState(0, l), units)
    moderator = ground_state_moderator(params, l, units)
    radius = validity_radius(moderator, chi.beta)

    def psi(sample):
        sample = np.asarray(sample, dtype=float)
        if np.any(sample < 0):
            raise ParameterError("Radius must be non-negative")
        safe = np.where(sample > 0, sample, 1.0)
        exponent = chi.log_norm + (l + 1) * np.log(safe) - chi.beta * sample + moderator.exponent(sample)
        with np.errstate(over="ignore"):
            return np.where(sample > 0, np.exp(exponent), 0.0)

    values = psi(r)
    valid = np.ones(np.shape(values), dtype=bool) if radius is None else np.asarray(r, dtype=float) <= radius
    if not np.all(valid):
        logger.warning(
            f"{np.count_nonzero(~valid)} samples lie beyond the validity radius {radius:.6g}: psi grows there"
        )
    if normalize and params.delta > 0 and params.b != 0:
        limit = 60.0 / chi.beta
        if radius is not None:
            limit = min(limit, radius)
        norm2, error = quad(lambda x: float(psi(x)) ** 2, 0.0, limit, limit=200, epsabs=1e-12)
        if not np.isfinite(norm2) or norm2 <= 0:
            raise QuadratureError("Moderated wavefunction norm is not positive", residual=error)
        values = values / math.sqrt(norm2)
    if np.ndim(values) == 0:
        return (float(values), bool(valid)) if with_mask else float(values)
    return (values, valid) if with_mask else values


def _ratio(numerator, denominator):
    if denominator == 0:
        return 0.0 if numerator == 0 else math.inf
    return abs(numerator / denominator)


def convergence_report(params, state, units=DEFAULT_UNITS):
    """
    Diagnose whether the perturbation series is trustworthy for one state.

    Ratios |shift/e0|, |e1/e0|, |e2/e1| and |e3/e2| (0/0 counts as 0). A state is trusted
    when every ratio is below 1 and high-confidence when every ratio is below 0.1.

    Returns:
        ConvergenceReport: Ratios, flags and the breakdown they refer to
    """
    check_units(units)
    breakdown = total_energy(params, state, units)
    ratios = (
        _ratio(breakdown.const_shift, breakdown.e0),
        _ratio(breakdown.e1, breakdown.e0),
        _ratio(breakdown.e2, breakdown.e1),
        _ratio(breakdown.e3, breakdown.e2),
    )
    report = ConvergenceReport(
        state=state.label,
        breakdown=breakdown,
        shift_ratio=ratios[0],
        e1_ratio=ratios[1],
        e2_ratio=ratios[2],
        e3_ratio=ratios[3],
        trusted=all(ratio < TRUST_THRESHOLD for ratio in ratios),
        high_confidence=all(ratio < HIGH_CONFIDENCE_THRESHOLD for ratio in ratios),
    )
    if not report.trusted:
        logger.warning(
            f"Perturbation series untrusted for {state.label} at b={params.b}, delta={params.delta}: "
            + ", ".join(f"{key}={value:.3g}" for key, value in report.ratios.items())
        )
    return report
