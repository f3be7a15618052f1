"""
Direct eigenvalue solver for the radial Schrodinger equation with the exact potential.

Primary method: Numerov integration on a logarithmic grid, x = ln r and y = chi / sqrt(r),
with node-count bisection and the derivative-mismatch (cusp) energy correction at the
outer classical turning point. Cross-check: finite-difference tridiagonal eigen-solve
on a uniform grid with Dirichlet ends and Richardson extrapolation.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal

from src.models.core import DEFAULT_UNITS, PotentialParams, QuantumState, hellmann_potential, states_in_shell
from src.models.perturbation import convergence_report, total_energy
from src.utils.errors import ConvergenceError, HellmannError, ParameterError, StateNotBoundError

logger = logging.getLogger(__name__)

RESCALE_LIMIT = 1e10


@dataclass(frozen=True)
class SolverConfig:
    """
    Radial box, grid and convergence settings of the eigenvalue solver.

    r_min and r_max default to 1e-6 Coulomb lengths and 80 decay lengths of the
    expected state; explicit values override them.

    Args:
        r_min (float, optional): Inner cutoff
        r_max (float, optional): Outer cutoff
        grid_points (int): Points of the logarithmic grid
        energy_tol (float): Grid-convergence tolerance on the eigenvalue
        max_iters (int): Iteration cap of the bisection / cusp-correction loop
        max_retries (int): Attempts with an enlarged box and grid after a failure
        r_min_scale (float): Default r_min in Coulomb lengths
        r_max_scale (float): Default r_max in decay lengths
    """

    r_min: float = None
    r_max: float = None
    grid_points: int = 20000
    energy_tol: float = 1e-9
    max_iters: int = 200
    max_retries: int = 2
    r_min_scale: float = 1e-6
    r_max_scale: float = 80.0

    def __post_init__(self):
        if self.grid_points < 1000:
            raise ParameterError(f"grid_points must be >= 1000, got {self.grid_points}")
        if self.energy_tol <= 0:
            raise ParameterError(f"energy_tol must be positive, got {self.energy_tol}")
        if self.r_min is not None and self.r_max is not None and not 0 < self.r_min < self.r_max:
            raise ParameterError(f"Need 0 < r_min < r_max, got r_min={self.r_min}, r_max={self.r_max}")
        if self.max_iters < 10 or self.max_retries < 0:
            raise ParameterError("max_iters must be >= 10 and max_retries >= 0")

    def enlarged(self, growth):
        """Config with the outer box and the grid both grown by `growth`."""
        return replace(
            self,
            r_max=None if self.r_max is None else self.r_max * growth,
            r_max_scale=self.r_max_scale * growth,
            grid_points=int(self.grid_points * growth),
        )

    def to_dict(self):
        return {
            "r_min": self.r_min,
            "r_max": self.r_max,
            "grid_points": self.grid_points,
            "energy_tol": self.energy_tol,
            "max_iters": self.max_iters,
            "max_retries": self.max_retries,
            "r_min_scale": self.r_min_scale,
            "r_max_scale": self.r_max_scale,
        }


@dataclass
class EigenResult:
    """
    One eigenvalue of the radial problem.

    Args:
        state (str): Spectroscopic label
        energy (float): Eigenvalue
        nodes (int): Sign changes of the returned wavefunction
        converged (bool): Grid-converged to energy_tol
        residual (float): |E(fine grid) - E(coarse grid)|
        method (str): "numerov" or "matrix"
        r_max (float): Outer cutoff used
        grid_points (int): Coarse grid size used
    """

    state: str
    energy: float
    nodes: int
    converged: bool
    residual: float
    method: str = "numerov"
    r_max: float = None
    grid_points: int = None
    r: np.ndarray = field(default=None, repr=False)
    chi: np.ndarray = field(default=None, repr=False)

    @property
    def binding(self):
        return -self.energy

    def to_dict(self):
        return {
            "state": self.state,
            "energy": self.energy,
            "binding": self.binding,
            "nodes": self.nodes,
            "converged": bool(self.converged),
            "residual": self.residual,
            "method": self.method,
            "r_max": self.r_max,
            "grid_points": self.grid_points,
        }


def _bounding_strength(params):
    """Strength Z with V(r) >= -Z/r everywhere, for a Coulomb lower bound."""
    return params.a + max(-params.b, 0.0)


def _guess_energy(params, state, units):
    """Perturbative total when usable, otherwise a Coulomb estimate with the weakest strength."""
    if params.a > params.b:
        try:
            total = total_energy(params, state, units).total
            if total < 0:
                return total
        except HellmannError:
            pass
    strengths = [s for s in (params.a, params.a - params.b) if s > 0]
    if not strengths:
        raise StateNotBoundError(f"Potential has no attractive Coulomb tail for {state.label}")
    return -min(strengths) ** 2 / (4.0 * units.kinetic * state.principal ** 2)


def _radial_box(params, state, units, config, energy_guess):
    strength = _bounding_strength(params)
    if strength <= 0:
        raise StateNotBoundError("Potential is nowhere attractive")
    r_min = config.r_min if config.r_min is not None else config.r_min_scale * 2.0 * units.kinetic / strength
    if config.r_max is not None:
        r_max = config.r_max
    else:
        kappa = math.sqrt(2.0 * units.mass * abs(energy_guess)) / units.hbar
        r_max = config.r_max_scale / kappa
    if r_max <= r_min:
        raise ParameterError(f"Radial box collapsed: r_min={r_min}, r_max={r_max}")
    return r_min, r_max


def _count_sign_changes(values, threshold=0.0):
    signs = [v > 0 for v in values if abs(v) > threshold]
    return sum(1 for previous, current in zip(signs, signs[1:]) if previous != current)


class NumerovRadialSolver:
    """
    Numerov shooting on a logarithmic grid for one (potential, l, grid) combination.

    Args:
        params (PotentialParams): Potential parameters
        l (int): Orbital angular momentum
        units (UnitSystem): Unit system
        r_min (float): Inner cutoff
        r_max (float): Outer cutoff
        grid_points (int): Number of grid points
    """

    def __init__(self, params, l, units, r_min, r_max, grid_points):
        self.params = params
        self.l = l
        self.kinetic = units.kinetic
        self.mesh = grid_points - 1
        self.x = np.linspace(math.log(r_min), math.log(r_max), grid_points)
        self.dx = self.x[1] - self.x[0]
        self.ddx12 = self.dx * self.dx / 12.0
        self.r = np.exp(self.x)
        self.vpot = hellmann_potential(params, self.r)
        self.r2h = self.r * self.r / self.kinetic
        self.barrier = (l + 0.5) ** 2

    def upper_bound(self):
        return float(self.vpot[-1] + self.kinetic * self.l * (self.l + 1) / self.r[-1] ** 2)

    def lower_bound(self, principal):
        strength = _bounding_strength(self.params)
        return -1.01 * strength ** 2 / (4.0 * self.kinetic * principal ** 2)

    def _f(self, energy):
        return 1.0 + self.ddx12 * ((energy - self.vpot) * self.r2h - self.barrier)

    def _turning_point(self, f):
        sign = np.sign(f - 1.0)
        changes = np.nonzero(sign[1:] != sign[:-1])[0]
        return int(changes[-1]) + 1 if len(changes) else -1

    def _outward(self, f, icl):
        r, l = self.r, self.l
        start = self.params.a - self.params.b
        y = [0.0] * (self.mesh + 1)
        for i in (0, 1):
            y[i] = r[i] ** (l + 1) * (1.0 - start * r[i] / (2.0 * self.kinetic * (l + 1))) / math.sqrt(r[i])
        for i in range(1, icl):
            y[i + 1] = ((12.0 - 10.0 * f[i]) * y[i] - f[i - 1] * y[i - 1]) / f[i + 1]
        return y

    def _inward(self, y, f, icl):
        mesh = self.mesh
        y[mesh] = self.dx
        y[mesh - 1] = (12.0 - 10.0 * f[mesh]) * y[mesh] / f[mesh - 1]
        for i in range(mesh - 1, icl, -1):
            y[i - 1] = ((12.0 - 10.0 * f[i]) * y[i] - f[i + 1] * y[i + 1]) / f[i - 1]
            if abs(y[i - 1]) > RESCALE_LIMIT:
                scale = y[i - 1]
                for k in range(i - 1, mesh + 1):
                    y[k] /= scale
        return y

    def solve(self, n, energy_guess, tolerance, max_iters):
        """
        Find the eigenvalue with n radial nodes.

        Args:
            n (int): Radial quantum number
            energy_guess (float): Starting energy
            tolerance (float): Relative size of the final cusp correction
            max_iters (int): Iteration cap

        Returns:
            tuple: (energy, y) with y normalized on the grid
        """
        principal = n + self.l + 1
        lower, upper = self.lower_bound(principal), self.upper_bound()
        if not lower < upper:
            raise StateNotBoundError(f"Empty energy bracket for n={n}, l={self.l}")
        energy = energy_guess if lower < energy_guess < upper else 0.5 * (lower + upper)
        matched = False
        y = None
        for _ in range(max_iters):
            if upper - lower < 1e-14 * (1.0 + abs(energy)):
                break
            f_arr = self._f(energy)
            icl = self._turning_point(f_arr)
            if icl < 2:
                lower = energy
                energy = 0.5 * (lower + upper)
                continue
            if icl >= self.mesh - 2:
                upper = energy
                energy = 0.5 * (lower + upper)
                continue
            f = f_arr.tolist()
            y = self._outward(f, icl)
            ncross = _count_sign_changes(y[: icl + 1])
            if ncross != n:
                if ncross > n:
                    upper = energy
                else:
                    lower = energy
                energy = 0.5 * (lower + upper)
                continue
            matched = True
            y_icl = y[icl]
            y = self._inward(y, f, icl)
            scale = y_icl / y[icl]
            for k in range(icl, self.mesh + 1):
                y[k] *= scale
            y_arr = np.array(y)
            norm = math.sqrt(float(np.sum(y_arr[1:] ** 2 * self.r[1:] ** 2)) * self.dx)
            y_arr /= norm
            ycusp = (y_arr[icl - 1] * f[icl - 1] + y_arr[icl + 1] * f[icl + 1] + 10.0 * f[icl] * y_arr[icl]) / 12.0
            dfcusp = f[icl] * (y_arr[icl] / ycusp - 1.0)
            delta_e = self.kinetic * dfcusp / self.ddx12 * ycusp * ycusp * self.dx
            if delta_e > 0:
                lower = energy
            elif delta_e < 0:
                upper = energy
            energy = min(upper, max(lower, energy + delta_e))
            y = y_arr
            if abs(delta_e) < tolerance * (1.0 + abs(energy)):
                return energy, y
        if not matched:
            raise StateNotBoundError(
                f"No solution with {n} nodes for l={self.l} below {self.upper_bound():.6g}"
            )
        if y is not None and upper - lower < 1e-12 * (1.0 + abs(energy)):
            return energy, y
        raise ConvergenceError(
            f"Numerov iteration did not converge for n={n}, l={self.l}",
            diagnostics={"energy": energy, "lower": lower, "upper": upper},
        )


def _solve_once(params, state, units, config, energy_guess):
    r_min, r_max = _radial_box(params, state, units, config, energy_guess)
    iteration_tol = max(config.energy_tol * 1e-2, 1e-11)
    coarse = NumerovRadialSolver(params, state.l, units, r_min, r_max, config.grid_points)
    e_coarse, _ = coarse.solve(state.n, energy_guess, iteration_tol, config.max_iters)
    fine = NumerovRadialSolver(params, state.l, units, r_min, r_max, 2 * config.grid_points - 1)
    e_fine, y = fine.solve(state.n, e_coarse, iteration_tol, config.max_iters)
    residual = abs(e_fine - e_coarse)
    chi = y * np.sqrt(fine.r)
    nodes = _count_sign_changes(chi, threshold=1e-8 * float(np.max(np.abs(chi))))
    result = EigenResult(
        state=state.label,
        energy=float(e_fine),
        nodes=nodes,
        converged=residual <= config.energy_tol * max(1.0, abs(e_fine)),
        residual=float(residual),
        method="numerov",
        r_max=r_max,
        grid_points=config.grid_points,
        r=fine.r,
        chi=chi,
    )
    if nodes != state.n:
        raise StateNotBoundError(f"{state.label}: solution has {nodes} nodes, expected {state.n}")
    if not result.converged:
        raise ConvergenceError(
            f"{state.label}: grid residual {residual:.3g} above tolerance {config.energy_tol:.3g}",
            diagnostics=result.to_dict(),
        )
    return result


def solve_bound_state(params, state, units=DEFAULT_UNITS, config=SolverConfig()):
    """
    Solve for the bound state with n radial nodes at angular momentum l.

    Failed attempts are retried with the box and grid grown exponentially.

    Args:
        params (PotentialParams): Potential parameters (a = 0 allowed)
        state (QuantumState): Target state, selected by node count
        units (UnitSystem): Unit system
        config (SolverConfig): Solver settings

    Returns:
        EigenResult: Grid-converged eigenvalue
    """
    energy_guess = _guess_energy(params, state, units)
    retry_count = 0
    attempt_config = config
    while True:
        try:
            return _solve_once(params, state, units, attempt_config, energy_guess)
        except ConvergenceError as e:
            retry_count += 1
            if retry_count > config.max_retries:
                logger.error(f"Maximum retries ({config.max_retries}) exceeded for {state.label}")
                raise e
            growth = 2 ** retry_count
            attempt_config = config.enlarged(growth)
            if "energy" in e.diagnostics and e.diagnostics["energy"] < 0:
                energy_guess = e.diagnostics["energy"]
            logger.info(f"{e}; retrying with box and grid x{growth} (attempt {retry_count}/{config.max_retries})")


def kinetic_expectation(result, params, l, units=DEFAULT_UNITS):
    """<T> = E - <V + barrier> over the normalized solved wavefunction."""
    if result.chi is None:
        raise ParameterError("EigenResult carries no wavefunction samples")
    r, chi = result.r, result.chi
    dx = math.log(r[1] / r[0])
    weight = chi * chi * r * dx
    norm = float(np.sum(weight))
    veff = hellmann_potential(params, r) + units.kinetic * l * (l + 1) / r ** 2
    return result.energy - float(np.sum(weight * veff)) / norm


def _matrix_level(params, state, units, r_max, intervals):
    dr = r_max / intervals
    r = dr * np.arange(1, intervals)
    h = units.kinetic
    diagonal = 2.0 * h / dr ** 2 + hellmann_potential(params, r) + h * state.l * (state.l + 1) / r ** 2
    off_diagonal = np.full(intervals - 2, -h / dr ** 2)
    values = eigh_tridiagonal(
        diagonal, off_diagonal, eigvals_only=True, select="i", select_range=(state.n, state.n),
    )
    return float(values[0])


def matrix_eigenvalue(params, state, units=DEFAULT_UNITS, config=SolverConfig(), rel_tol=1e-7, levels=3):
    """
    Finite-difference eigenvalue on a uniform grid over (0, r_max), Richardson-extrapolated.

    chi vanishes at both ends (Dirichlet). chi is smooth at the origin, so the
    three-point error expands in even powers of the spacing; the grid is refined by
    doubling and the last two Richardson estimates must agree to rel_tol.

    The n-th eigenvalue of the symmetric tridiagonal operator is the state with n nodes.

    Returns:
        EigenResult: Extrapolated eigenvalue (node count taken from the index)

    Raises:
        StateNotBoundError: The level lies in the continuum of the box
        ConvergenceError: The extrapolated estimates disagree by more than rel_tol
    """
    if levels < 3:
        raise ParameterError(f"matrix_eigenvalue needs at least 3 grid levels, got {levels}")
    energy_guess = _guess_energy(params, state, units)
    _, r_max = _radial_box(params, state, units, config, energy_guess)
    intervals = [config.grid_points * 2 ** k for k in range(levels)]
    raw = [_matrix_level(params, state, units, r_max, count) for count in intervals]
    if raw[-1] >= 0:
        raise StateNotBoundError(f"{state.label}: level {state.n} at l={state.l} lies in the continuum of the box")
    extrapolated = [(4.0 * fine - coarse) / 3.0 for coarse, fine in zip(raw, raw[1:])]
    energy = extrapolated[-1]
    residual = abs(energy - extrapolated[-2])
    logger.debug(f"{state.label}: matrix levels {raw} -> {extrapolated}")
    result = EigenResult(
        state=state.label,
        energy=energy,
        nodes=state.n,
        converged=residual <= rel_tol * max(1.0, abs(energy)),
        residual=residual,
        method="matrix",
        r_max=r_max,
        grid_points=intervals[-1],
    )
    if not result.converged:
        raise ConvergenceError(
            f"{state.label}: finite-difference estimates differ by {residual:.3e} after {levels} grid levels",
            diagnostics=result.to_dict(),
        )
    return result


@dataclass
class SpectrumScan:
    """Lowest eigenvalues at fixed l; `truncated` is set when fewer states were bound."""

    l: int
    results: list
    requested: int
    truncated: bool = False

    def __len__(self):
        return len(self.results)

    def __iter__(self):
        return iter(self.results)

    def __getitem__(self, index):
        return self.results[index]

    @property
    def energies(self):
        return [result.energy for result in self.results]


def scan_spectrum(params, l, units=DEFAULT_UNITS, config=SolverConfig(), count=1):
    """
    Lowest `count` eigenvalues at fixed l, node counts 0..count-1.

    Returns:
        SpectrumScan: Results in increasing energy
    """
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    results = []
    truncated = False
    for n in range(count):
        try:
            results.append(solve_bound_state(params, QuantumState(n=n, l=l), units, config))
        except StateNotBoundError as e:
            logger.warning(f"Spectrum scan stopped at n={n}, l={l}: {e}")
            truncated = True
            break
    energies = [result.energy for result in results]
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise ConvergenceError(f"Spectrum at l={l} is not strictly increasing: {energies}")
    return SpectrumScan(l=l, results=results, requested=count, truncated=truncated)


@dataclass
class OrderingReport:
    """Energies per shell and the level-ordering violations found among them."""

    b: float
    delta: float
    energies: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {"b": self.b, "delta": self.delta, "energies": self.energies, "violations": self.violations}


def level_ordering_check(params, units=DEFAULT_UNITS, config=SolverConfig(), n_max=4, l_max=3):
    """
    Check the sign of E(N, l+1) - E(N, l) within each principal shell N <= n_max.

    Expected: positive for b < 0, negative for b > 0, zero (Coulomb degeneracy) for b = 0.

    Returns:
        OrderingReport: Energies and violations
    """
    report = OrderingReport(b=params.b, delta=params.delta)
    for principal in range(1, n_max + 1):
        shell = [state for state in states_in_shell(principal) if state.l <= l_max]
        energies = [solve_bound_state(params, state, units, config).energy for state in shell]
        for state, energy in zip(shell, energies):
            report.energies[state.label] = energy
        for (low, e_low), (high, e_high) in zip(zip(shell, energies), zip(shell[1:], energies[1:])):
            difference = e_high - e_low
            noise = 10.0 * config.energy_tol * max(1.0, abs(e_low))
            if params.b == 0 or params.delta == 0:
                ok = abs(difference) <= max(noise, 1e-7 * abs(e_low))
                expected = "0"
            elif params.b < 0:
                ok = difference > 0
                expected = ">0"
            else:
                ok = difference < 0
                expected = "<0"
            if not ok:
                report.violations.append(
                    {"lower": low.label, "upper": high.label, "difference": difference, "expected": expected}
                )
    if report.violations:
        logger.warning(f"Level ordering violated at b={params.b}, delta={params.delta}: {report.violations}")
    return report


def perturbation_gap_report(params, states, units=DEFAULT_UNITS, config=SolverConfig()):
    """
    Pair oracle eigenvalues with perturbative totals.

    Returns:
        list: One dict per state with energies, relative gap and trust flags
    """
    records = []
    for state in states:
        report = convergence_report(params, state, units)
        result = solve_bound_state(params, state, units, config)
        gap = abs(report.breakdown.total - result.energy)
        records.append({
            "state": state.label,
            "perturbative": report.breakdown.total,
            "oracle": result.energy,
            "gap": gap,
            "relative_gap": gap / abs(result.energy),
            "trusted": report.trusted,
            "high_confidence": report.high_confidence,
            "ratios": report.ratios,
        })
    return records


def crossing_scan(a, b_values, delta_values, pairs, units=DEFAULT_UNITS, config=SolverConfig()):
    """
    Search for sign changes of E(first) - E(second) across a (b, delta) grid.

    Exploratory only: states that are not bound at a grid point are skipped.

    Args:
        a (float): Coulomb strength
        b_values (list): Yukawa strengths
        delta_values (list): Screening parameters, scanned in the given order
        pairs (list): (label, label) pairs

    Returns:
        dict: "cells" with every difference and "witnesses" where the sign flips along delta
    """
    cells, witnesses = [], []
    for first_label, second_label in pairs:
        first, second = QuantumState.parse(first_label), QuantumState.parse(second_label)
        for b in b_values:
            previous = None
            for delta in delta_values:
                params = PotentialParams(a=a, b=b, delta=delta)
                try:
                    e_first = solve_bound_state(params, first, units, config).energy
                    e_second = solve_bound_state(params, second, units, config).energy
                except (StateNotBoundError, ConvergenceError) as e:
                    logger.info(f"Crossing scan skipped b={b}, delta={delta}: {e}")
                    previous = None
                    continue
                difference = e_first - e_second
                cells.append({"pair": f"{first_label}-{second_label}", "b": b, "delta": delta, "difference": difference})
                if previous is not None and previous[1] * difference < 0:
                    witnesses.append({
                        "pair": f"{first_label}-{second_label}", "b": b,
                        "delta_range": [previous[0], delta],
                    })
                previous = (delta, difference)
    return {"cells": cells, "witnesses": witnesses}
