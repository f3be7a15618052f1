"""
Numerical quadrature of the integral definitions of the perturbative corrections.

Every closed form of the perturbation module is re-derived here from integrals over
the normalized Coulomb wavefunctions, so the two paths can be compared cell by cell.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from src.models.core import DEFAULT_UNITS, CoulombWavefunction
from src.models.perturbation import energy_shifts, superpotential_terms
from src.utils.errors import ParameterError, QuadratureError

logger = logging.getLogger(__name__)

# Fractional distance from an analytic node inside which W samples are dropped
NODE_WINDOW = 1e-3


@dataclass(frozen=True)
class QuadratureConfig:
    """
    Tolerances and cutoffs of the adaptive integrator.

    Args:
        abs_tol (float): Absolute tolerance
        rel_tol (float): Relative tolerance
        r_max_scale (float): Upper cutoff in units of 1/beta
        max_subdivisions (int): Subinterval cap passed to the integrator
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    r_max_scale: float = 60.0
    max_subdivisions: int = 400

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ParameterError("Quadrature tolerances must be positive")
        if self.r_max_scale < 20:
            raise ParameterError(f"r_max_scale must be >= 20, got {self.r_max_scale}")
        if self.max_subdivisions < 50:
            raise ParameterError(f"max_subdivisions must be >= 50, got {self.max_subdivisions}")

    def to_dict(self):
        return {
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "r_max_scale": self.r_max_scale,
            "max_subdivisions": self.max_subdivisions,
        }


@dataclass(frozen=True)
class SampledFunction:
    """A function tabulated on a strictly increasing radial grid."""

    r: np.ndarray
    values: np.ndarray
    excluded: tuple = ()

    def __post_init__(self):
        if len(self.r) and (self.r[0] <= 0 or np.any(np.diff(self.r) <= 0)):
            raise ParameterError("Sample grid must be strictly increasing and start above 0")
        if not np.all(np.isfinite(self.values)):
            raise QuadratureError("Sampled superpotential has non-finite values")


@dataclass(frozen=True)
class CorrectionIntegrals:
    """
    Numerically integrated corrections and tabulated superpotentials of one state.

    Args:
        e1_num (float): First-order correction
        e2_num (float): Second-order correction
        e3_num (float): Third-order correction
        w1_samples (SampledFunction): W^(1) on the radial grid
        w2_samples (SampledFunction): W^(2) on the radial grid
    """

    e1_num: float
    e2_num: float
    e3_num: float
    w1_samples: SampledFunction = None
    w2_samples: SampledFunction = None


def _breakpoints(chi, upper):
    scale = 1.0 / chi.beta
    points = [k * scale for k in (1, 2, 5, 10, 20, 40)]
    points.extend(chi.node_positions())
    return sorted(p for p in points if 0 < p < upper)


def _integrate(func, lower, upper, config, points=None, label="integral", epsabs=None):
    """
    Adaptive Gauss-Kronrod integral with a hard failure on non-convergence.

    Returns:
        float: The integral value
    """
    kwargs = {
        "limit": config.max_subdivisions,
        "epsabs": config.abs_tol if epsabs is None else epsabs,
        "epsrel": config.rel_tol,
        "full_output": 1,
    }
    if points and np.isfinite(upper):
        kwargs["points"] = points
    result = quad(func, lower, upper, **kwargs)
    value, error = result[0], result[1]
    if not np.isfinite(value):
        raise QuadratureError(f"{label}: non-finite result", residual=error)
    if len(result) > 3:
        target = max(kwargs["epsabs"], config.rel_tol * abs(value))
        if error > 1e3 * target:
            raise QuadratureError(f"{label}: {result[3]}", residual=error)
        logger.warning(f"{label}: integrator warning, error estimate {error:.3g}")
    return value


def _upper(chi, config):
    return config.r_max_scale / chi.beta


def coulomb_moment(params, state, k, units=DEFAULT_UNITS):
    """
    Closed-form radial moment <r^k> of a Coulomb state for k = 1, 2, 3.

    With kappa = m (a - b) / hbar^2:
    <r> = (3N^2 - L) / (2 kappa), <r^2> = N^2 (5N^2 - 3L + 1) / (2 kappa^2),
    <r^3> = N^2 (35N^4 + 25N^2 - 30N^2 L + 3L^2 - 6L) / (8 kappa^3).
    """
    params.require_bound()
    kappa = units.mass * params.net_strength / units.hbar ** 2
    N2, L = state.principal ** 2, state.L
    if k == 0:
        return 1.0
    if k == 1:
        return (3 * N2 - L) / (2.0 * kappa)
    if k == 2:
        return N2 * (5 * N2 - 3 * L + 1) / (2.0 * kappa ** 2)
    if k == 3:
        return N2 * (35 * N2 ** 2 + 25 * N2 - 30 * N2 * L + 3 * L ** 2 - 6 * L) / (8.0 * kappa ** 3)
    raise ParameterError(f"Closed-form moment only for k <= 3, got {k}")


def moment_quadrature(params, state, k, units=DEFAULT_UNITS, config=QuadratureConfig()):
    """Numerical <r^k> = integral of chi^2 r^k over (0, inf)."""
    chi = CoulombWavefunction.from_params(params, state, units)
    upper = _upper(chi, config)
    return _integrate(
        lambda x: chi(x) ** 2 * x ** k, 0.0, upper, config,
        points=_breakpoints(chi, upper), label=f"<r^{k}> {state.label}", epsabs=0.0,
    )


def normalization_quadrature(params, state, units=DEFAULT_UNITS, config=QuadratureConfig()):
    return moment_quadrature(params, state, 0, units, config)


def orthogonality_quadrature(params, first, second, units=DEFAULT_UNITS, config=QuadratureConfig()):
    """Overlap integral of two Coulomb states; same l for orthogonality."""
    chi1 = CoulombWavefunction.from_params(params, first, units)
    chi2 = CoulombWavefunction.from_params(params, second, units)
    upper = config.r_max_scale / min(chi1.beta, chi2.beta)
    points = sorted(set(_breakpoints(chi1, upper)) | set(_breakpoints(chi2, upper)))
    return _integrate(
        lambda x: chi1(x) * chi2(x), 0.0, upper, config,
        points=points, label=f"<{first.label}|{second.label}>",
    )


def e1_quadrature(params, state, units=DEFAULT_UNITS, config=QuadratureConfig()):
    """
    First-order correction as the integral of chi^2 (b delta^2 / 2) r.

    Args:
        params (PotentialParams): Potential parameters, a > b
        state (QuantumState): The state
        units (UnitSystem): Unit system
        config (QuadratureConfig): Integrator settings

    Returns:
        float: E^(1)
    """
    if params.b == 0 or params.delta == 0:
        params.require_bound()
        return 0.0
    return 0.5 * params.b * params.delta ** 2 * moment_quadrature(params, state, 1, units, config)


def _indefinite(chi, weight, r, split, config):
    """
    Integral of chi^2 weight from 0 to r for a weight whose full integral vanishes.

    Beyond the single sign change `split` of the weight the complementary tail
    -integral(r, inf) is used, so each piece has a fixed-sign integrand.
    """
    integrand = lambda x: chi(x) ** 2 * weight(x)
    if r <= split:
        return _integrate(integrand, 0.0, r, config, label="W numerator", epsabs=0.0)
    return -_integrate(integrand, r, np.inf, config, label="W tail", epsabs=0.0)


def _sample_superpotential(params, state, units, r_grid, numerator, label):
    """
    Tabulate sqrt(2m)/hbar numerator(chi, r) / chi(r)^2, skipping points within
    NODE_WINDOW of a node and points where chi^2 underflows.
    """
    chi = CoulombWavefunction.from_params(params, state, units)
    factor = math.sqrt(2.0 * units.mass) / units.hbar
    nodes = chi.node_positions()
    grid = np.asarray(r_grid, dtype=float)
    kept_r, kept_values, excluded = [], [], []
    for r in grid:
        if r <= 0:
            raise ParameterError("Superpotential grid must be strictly positive")
        if len(nodes) and np.min(np.abs(nodes - r)) < NODE_WINDOW * r:
            excluded.append(float(r))
            continue
        density = chi(r) ** 2
        if density == 0.0:
            excluded.append(float(r))
            continue
        kept_r.append(r)
        kept_values.append(factor * numerator(chi, r) / density)
    if excluded:
        logger.warning(f"{label} {state.label}: excluded {len(excluded)} grid points near nodes or underflow")
    return SampledFunction(r=np.array(kept_r), values=np.array(kept_values), excluded=tuple(excluded))


def w1_quadrature(params, state, r_grid, units=DEFAULT_UNITS, config=QuadratureConfig()):
    """
    Sample W^(1)(r) = sqrt(2m)/hbar chi(r)^-2 integral_0^r chi^2(x) [E^(1) - (b delta^2/2) x] dx.

    Grid points next to a node of chi are excluded with a warning. For nodeless states
    the result is the linear function w1_linear r.

    Returns:
        SampledFunction: W^(1) on the kept grid points
    """
    grid = np.asarray(r_grid, dtype=float)
    if params.b == 0 or params.delta == 0:
        params.require_bound()
        return SampledFunction(r=grid, values=np.zeros_like(grid))
    e1, _, _ = energy_shifts(params, state, units)
    slope = 0.5 * params.b * params.delta ** 2
    split = e1 / slope
    weight = lambda x: e1 - slope * x
    return _sample_superpotential(
        params, state, units, grid, lambda chi, r: _indefinite(chi, weight, r, split, config), "W1"
    )


def w2_quadrature(params, state, r_grid, units=DEFAULT_UNITS, config=QuadratureConfig(), reading="derived", e2=None):
    """
    Sample W^(2)(r) from its integral definition.

    The "derived" reading uses W^(1)(x)^2 inside the integral; the "mixed" reading uses
    W^(1)(r) W^(1)(x) as typeset in the literature and exists for comparison only.

    Args:
        reading (str): "derived" or "mixed"
        e2 (float, optional): Second-order energy, closed form when omitted

    Returns:
        SampledFunction: W^(2) on the kept grid points
    """
    grid = np.asarray(r_grid, dtype=float)
    if params.b == 0 or params.delta == 0:
        params.require_bound()
        return SampledFunction(r=grid, values=np.zeros_like(grid))
    if e2 is None:
        _, e2, _ = energy_shifts(params, state, units)
    c1 = superpotential_terms(params, state, units).w1_linear
    v2 = params.b * params.delta ** 3 / 6.0
    if reading == "derived":
        quadratic = c1 ** 2 + v2
        split = math.sqrt(-e2 / quadratic) if e2 * quadratic < 0 else math.inf
        weight = lambda x: e2 + quadratic * x * x
        return _sample_superpotential(
            params, state, units, grid, lambda chi, r: _indefinite(chi, weight, r, split, config), "W2"
        )
    if reading != "mixed":
        raise ParameterError(f"Unknown W2 reading '{reading}'")
    mixed = lambda chi, r: _integrate(
        lambda x: chi(x) ** 2 * (e2 + c1 * r * c1 * x + v2 * x * x), 0.0, r, config,
        label="W2 mixed", epsabs=config.abs_tol * 1e-6,
    )
    return _sample_superpotential(params, state, units, grid, mixed, "W2 mixed")


def _w2_numeric_moment(params, state, units, config, e2, c1):
    """
    <W1 W2> with W2 from its integral definition.

    chi^2 W2 = sqrt(2m)/hbar * I(x), so <W1 W2> = sqrt(2m)/hbar * c1 * integral x I(x) dx
    and no division by chi^2 is needed.
    """
    chi = CoulombWavefunction.from_params(params, state, units)
    factor = math.sqrt(2.0 * units.mass) / units.hbar
    quadratic = c1 ** 2 + params.b * params.delta ** 3 / 6.0
    split = math.sqrt(-e2 / quadratic) if e2 * quadratic < 0 else math.inf
    upper = _upper(chi, config)
    inner = lambda x: _indefinite(chi, lambda t: e2 + quadratic * t * t, x, split, config) if x > 0 else 0.0
    outer = _integrate(
        lambda x: x * inner(x), 0.0, upper, config,
        points=_breakpoints(chi, upper), label="<W1 W2> numeric", epsabs=config.abs_tol * 1e-3,
    )
    return factor * c1 * outer


def e2_e3_quadrature(params, state, units=DEFAULT_UNITS, config=QuadratureConfig(), cross_term_factor=2, numeric_w2=False):
    """
    Second and third order corrections from their integral definitions.

    e2 = <-(b delta^3/6) r^2 - W1^2> with the closed-form W1. e3 = <(b delta^4/24) r^3>
    - f <W1 W2>; the Riccati hierarchy gives f = 2, f = 1 is the literal typeset form.
    W2 comes from its closed form unless `numeric_w2` is set, which integrates its
    definition instead.

    Returns:
        tuple: (e2_num, e3_num)
    """
    if params.b == 0 or params.delta == 0:
        params.require_bound()
        return 0.0, 0.0
    if cross_term_factor not in (1, 2):
        raise ParameterError(f"cross_term_factor must be 1 or 2, got {cross_term_factor}")
    terms = superpotential_terms(params, state, units)
    c1 = terms.w1_linear
    b, d = params.b, params.delta
    r2 = moment_quadrature(params, state, 2, units, config)
    r3 = moment_quadrature(params, state, 3, units, config)
    e2_num = -(b * d ** 3 / 6.0) * r2 - c1 ** 2 * r2
    if numeric_w2:
        cross = _w2_numeric_moment(params, state, units, config, e2_num, c1)
    else:
        cross = c1 * (terms.w2_quadratic * r3 + terms.w2_linear * r2)
    e3_num = (b * d ** 4 / 24.0) * r3 - cross_term_factor * cross
    return e2_num, e3_num


def correction_integrals(params, state, r_grid=None, units=DEFAULT_UNITS, config=QuadratureConfig(), **options):
    """Collect e1..e3 and, when a grid is given, the sampled W^(1) and W^(2)."""
    e1_num = e1_quadrature(params, state, units, config)
    e2_num, e3_num = e2_e3_quadrature(params, state, units, config, **options)
    w1 = w2 = None
    if r_grid is not None:
        w1 = w1_quadrature(params, state, r_grid, units, config)
        w2 = w2_quadrature(params, state, r_grid, units, config, e2=e2_num)
    return CorrectionIntegrals(e1_num=e1_num, e2_num=e2_num, e3_num=e3_num, w1_samples=w1, w2_samples=w2)


# Sample radii of the W1 linearity check, in units of 1/beta; 1/beta itself is the 2s node
W1_CHECK_SCALES = (0.25, 0.5, 1.5, 3.0, 6.0)


@dataclass
class QuadratureComparison:
    """
    Deviation of each numerically integrated correction from its closed form.

    w1_slopes holds the sampled W^(1)(r)/r at w1_radii; the closed form predicts the
    constant w1_slope everywhere.
    """

    state: str
    b: float
    delta: float
    closed: tuple
    numeric: tuple
    status: list = field(default_factory=list)
    w1_slope: float = 0.0
    w1_radii: tuple = ()
    w1_slopes: tuple = ()
    w1_status: str = "match"

    def deviations(self):
        return [abs(n - c) for n, c in zip(self.numeric, self.closed)]

    def relative_deviations(self):
        return [abs(n - c) / abs(c) if c else abs(n - c) for n, c in zip(self.numeric, self.closed)]

    def w1_deviation(self):
        """Largest relative distance of a sampled slope from the closed-form slope."""
        if not self.w1_slopes:
            return 0.0
        spread = max(abs(s - self.w1_slope) for s in self.w1_slopes)
        return spread / abs(self.w1_slope) if self.w1_slope else spread

    @property
    def breached(self):
        return "breach" in self.status or self.w1_status == "breach"

    def to_dict(self):
        return {
            "state": self.state,
            "b": self.b,
            "delta": self.delta,
            "closed": list(self.closed),
            "numeric": list(self.numeric),
            "abs_deviation": self.deviations(),
            "rel_deviation": self.relative_deviations(),
            "status": self.status,
            "w1_slope": self.w1_slope,
            "w1_radii": list(self.w1_radii),
            "w1_slopes": list(self.w1_slopes),
            "w1_status": self.w1_status,
        }


def w1_linearity(params, state, units=DEFAULT_UNITS, config=QuadratureConfig(), scales=W1_CHECK_SCALES):
    """
    Sampled W^(1)(r)/r at r = scale/beta next to the closed-form slope w1_linear.

    W^(1) is exactly linear for nodeless states only. For n >= 1 the sampled ratio
    varies with r, and diverges towards each node.

    Returns:
        tuple: (closed slope, kept radii, sampled slopes)
    """
    slope = superpotential_terms(params, state, units).w1_linear
    chi = CoulombWavefunction.from_params(params, state, units)
    sampled = w1_quadrature(params, state, [scale / chi.beta for scale in scales], units, config)
    return slope, tuple(float(r) for r in sampled.r), tuple(float(v / r) for r, v in zip(sampled.r, sampled.values))


def compare_with_closed_forms(params, state, units=DEFAULT_UNITS, config=QuadratureConfig(), rel_tol=1e-6, cross_term_factor=2):
    """
    Compare e1, e2, e3 and the W^(1) slope from quadrature with the closed forms.

    A deviation beyond max(10 abs_tol, rel_tol |closed|) is a breach, except for
    radially excited states: there W^(1) is not linear, and e3 does not follow from
    the integral definition, so those deviations are recorded as findings.

    Returns:
        QuadratureComparison: Per-order values and status
    """
    closed = energy_shifts(params, state, units)
    numeric = (e1_quadrature(params, state, units, config),) + e2_e3_quadrature(
        params, state, units, config, cross_term_factor=cross_term_factor
    )
    w1_slope, w1_radii, w1_slopes = w1_linearity(params, state, units, config)
    comparison = QuadratureComparison(
        state=state.label, b=params.b, delta=params.delta, closed=closed, numeric=numeric,
        w1_slope=w1_slope, w1_radii=w1_radii, w1_slopes=w1_slopes,
    )
    for order, (num, ref) in enumerate(zip(numeric, closed), start=1):
        if abs(num - ref) <= max(10 * config.abs_tol, rel_tol * abs(ref)):
            comparison.status.append("match")
        elif order == 3 and state.n > 0:
            comparison.status.append("finding")
        else:
            comparison.status.append("breach")
    if all(abs(s - w1_slope) <= max(10 * config.abs_tol, rel_tol * abs(w1_slope)) for s in w1_slopes):
        comparison.w1_status = "match"
    elif state.n > 0:
        comparison.w1_status = "finding"
    else:
        comparison.w1_status = "breach"
    if comparison.w1_status != "match":
        logger.info(f"{state.label}: sampled W1/r spans {min(w1_slopes):.6g}..{max(w1_slopes):.6g}, closed slope {w1_slope:.6g}")
    return comparison
