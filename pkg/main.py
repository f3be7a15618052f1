#!/usr/bin/env python3
"""
Hellmann potential toolkit.
Computes perturbative bound-state energies of V(r) = -a/r + b exp(-delta r)/r, regenerates
the published energy tables, cross-validates the closed forms against quadrature and a
direct eigenvalue solver, and dumps moderated ground-state wavefunctions.
"""

import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from src.models.core import DEFAULT_UNITS, CoulombWavefunction, PotentialParams, QuantumState, UnitSystem, states_up_to
from src.models.oracle import (
    SolverConfig,
    crossing_scan,
    level_ordering_check,
    matrix_eigenvalue,
    perturbation_gap_report,
    scan_spectrum,
    solve_bound_state,
)
from src.models.perturbation import (
    convergence_report,
    ground_state_moderator,
    ground_state_wavefunction,
    moderating_factor,
    validity_radius,
)
from src.models.quadrature import QuadratureConfig, compare_with_closed_forms
from src.utils.errors import HellmannError, ParameterError, VerificationBreach
from src.utils.formatting import (
    FORMATS,
    fmt_full,
    frame_to_csv,
    metadata_header,
    render_breakdown,
    render_records,
    render_table,
    to_json,
    write_output,
)
from src.utils.preset_loader import PresetLoader, compare_published
from src.utils.tables import TOOL_VERSION, TableResult, generate_table, load_config, recompute_mismatches, with_engine

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_STATES = ("1s", "2s", "2p", "3s", "3p", "3d")
ORACLE_STATES = DEFAULT_STATES + ("4s", "4p", "4d", "4f")
QUADRATURE_STATES = tuple(state.label for state in states_up_to(5))
QUADRATURE_B = (-10.0, -2.0, -1.0, 1.0)
QUADRATURE_DELTA = (0.001, 0.01, 0.05)


def configure_logging(verbose=False):
    level = os.getenv("HELLMANN_LOG_LEVEL", "WARNING").upper()
    if verbose:
        level = "INFO"
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def results_dir():
    return os.getenv("HELLMANN_RESULTS_DIR", "results")


def _units(args):
    return UnitSystem(hbar=args.hbar, mass=args.mass)


def _state(args):
    """State from --state, or from the radial --n and --l flags."""
    if getattr(args, "state", None):
        return QuantumState.parse(args.state)
    if args.n is None or args.l is None:
        raise ParameterError("Give --state LABEL or both --n and --l")
    return QuantumState(n=args.n, l=args.l)


def _states(labels):
    return [QuantumState.parse(label) for label in labels]


def _solver_config(args):
    options = {}
    for name in ("grid_points", "energy_tol", "r_max", "max_retries"):
        value = getattr(args, name, None)
        if value is not None:
            options[name] = value
    return SolverConfig(**options)


def _emit(text, output=None):
    rendered = write_output(text, output)
    if rendered is not None:
        sys.stdout.write(rendered)
    else:
        print(f"Output written to {output}", file=sys.stderr)


def cmd_energy(args):
    """Print the perturbative energy breakdown of one state."""
    units = _units(args)
    params = PotentialParams(a=args.a, b=args.b, delta=args.delta)
    state = _state(args)
    report = convergence_report(params, state, units)
    _emit(render_breakdown(report.breakdown, report, params, state, args.format, args.full_precision))
    return 0


def _load_table_spec(args):
    overrides = {"engine": args.engine} if args.engine else None
    if args.config:
        spec = load_config(args.config, overrides)
    elif args.preset:
        spec = PresetLoader().get_preset(args.preset)
        if args.engine:
            spec = with_engine(spec, args.engine)
    else:
        raise ParameterError("Give --preset NAME or --config FILE")
    return spec


def cmd_table(args):
    """Compute a table and write it as json plus the requested rendering."""
    spec = _load_table_spec(args)
    solver_config = _solver_config(args)
    result = generate_table(spec, solver_config, progress=args.progress)

    output_dir = args.output or results_dir()
    os.makedirs(output_dir, exist_ok=True)
    json_path = os.path.join(output_dir, f"{spec.name}.json")
    result.save(json_path)
    logger.info(f"Table saved to {json_path}")
    if args.format == "csv":
        csv_path = os.path.join(output_dir, f"{spec.name}.csv")
        write_output(render_table(result, "csv"), csv_path)
        logger.info(f"Table saved to {csv_path}")
    _emit(render_table(result, args.format))

    if args.strict and (result.failed or result.untrusted):
        print(f"{len(result.failed)} failed and {len(result.untrusted)} untrusted cells", file=sys.stderr)
        return VerificationBreach.exit_code
    return 0


def verify_quadrature(args, units):
    config = QuadratureConfig()
    records = []
    for state in _states(args.states or QUADRATURE_STATES):
        for b in args.b or QUADRATURE_B:
            for delta in args.delta or QUADRATURE_DELTA:
                params = PotentialParams(a=args.a, b=b, delta=delta)
                comparison = compare_with_closed_forms(params, state, units, config, rel_tol=args.rel_tol or 1e-6)
                for order, (closed, numeric, relative, status) in enumerate(
                    zip(comparison.closed, comparison.numeric, comparison.relative_deviations(), comparison.status),
                    start=1,
                ):
                    records.append({
                        "suite": "quadrature", "state": state.label, "b": b, "delta": delta, "term": f"e{order}",
                        "reference": closed, "value": numeric, "rel_deviation": relative, "status": status,
                    })
                worst = max(comparison.w1_slopes, key=lambda s: abs(s - comparison.w1_slope), default=comparison.w1_slope)
                records.append({
                    "suite": "quadrature", "state": state.label, "b": b, "delta": delta, "term": "w1_slope",
                    "reference": comparison.w1_slope, "value": worst, "rel_deviation": comparison.w1_deviation(),
                    "status": comparison.w1_status,
                })
    return records


def verify_oracle(args, units):
    """
    Oracle gaps are asserted for high-confidence cells only; trusted cells are reported,
    untrusted cells fail under --strict.
    """
    rel_tol = args.rel_tol or 1e-5
    solver_config = _solver_config(args)
    records = []
    for b in args.b or (-10.0,):
        for delta in args.delta or (0.001,):
            params = PotentialParams(a=args.a, b=b, delta=delta)
            for gap in perturbation_gap_report(params, _states(args.states or ORACLE_STATES), units, solver_config):
                if not gap["trusted"]:
                    status = "breach" if args.strict else "untrusted"
                elif not gap["high_confidence"]:
                    status = "trusted"
                else:
                    status = "match" if gap["relative_gap"] <= rel_tol else "breach"
                records.append({
                    "suite": "oracle", "state": gap["state"], "b": b, "delta": delta, "term": "total",
                    "reference": gap["oracle"], "value": gap["perturbative"],
                    "rel_deviation": gap["relative_gap"], "status": status,
                })
    return records


def verify_paper(args, units):
    loader = PresetLoader()
    records = []
    for name in sorted(loader.published):
        for record in compare_published(loader.get_published(name), units):
            records.append({
                "suite": f"paper:{name}", "state": record["state"], "b": record["b"], "delta": record["delta"],
                "term": "binding", "reference": float(record["printed"]), "value": record["computed"],
                "rel_deviation": record["deviation"] / abs(float(record["printed"])), "status": record["status"],
            })
    return records


def verify_file(args):
    result = TableResult.load(args.from_file)
    mismatches = recompute_mismatches(result)
    records = [{
        "suite": "from-file", "state": m["state"], "b": m["b"], "delta": m["delta"], "term": m.get("field", "error"),
        "reference": m["saved"], "value": m["fresh"], "rel_deviation": None, "status": "breach",
    } for m in mismatches]
    if not records:
        print(f"{args.from_file}: {len(result.cells)} cells re-validated", file=sys.stderr)
    return records


VERIFY_COLUMNS = ["suite", "state", "b", "delta", "term", "reference", "value", "rel_deviation", "status"]


def cmd_verify(args):
    """Run the cross-validation suites and exit nonzero on any breach."""
    units = _units(args)
    if args.from_file:
        records = verify_file(args)
    else:
        suites = {"quadrature": verify_quadrature, "oracle": verify_oracle, "paper": verify_paper}
        modes = list(suites) if args.mode == "all" else [args.mode]
        records = []
        for mode in modes:
            logger.info(f"Running {mode} verification")
            records.extend(suites[mode](args, units))

    _emit(render_records(records, VERIFY_COLUMNS, args.format))
    summary = {}
    for record in records:
        suite = summary.setdefault(record["suite"], {"cells": 0, "max_rel_deviation": 0.0, "breaches": 0})
        suite["cells"] += 1
        if record["rel_deviation"] is not None and record["status"] == "match":
            suite["max_rel_deviation"] = max(suite["max_rel_deviation"], record["rel_deviation"])
        suite["breaches"] += record["status"] == "breach"
    for name, suite in summary.items():
        print(
            f"{name}: {suite['cells']} checks, max matched deviation {suite['max_rel_deviation']:.3g}, "
            f"{suite['breaches']} breaches",
            file=sys.stderr,
        )
    breaches = [record for record in records if record["status"] == "breach"]
    if breaches:
        raise VerificationBreach(f"{len(breaches)} tolerance breaches")
    return 0


def cmd_oracle(args):
    """Direct eigenvalues: one state, a spectrum scan, level ordering or a crossing scan."""
    units = _units(args)
    solver_config = _solver_config(args)
    if args.crossings:
        pairs = [tuple(pair.split(":", 1)) for pair in args.crossings]
        scan = crossing_scan(args.a, args.b_values or [args.b], args.delta_values or [args.delta], pairs, units, solver_config)
        records = scan["cells"]
        _emit(render_records(records, ["pair", "b", "delta", "difference"], args.format))
        for witness in scan["witnesses"]:
            print(f"sign change: {witness['pair']} at b={witness['b']:g}, delta in {witness['delta_range']}", file=sys.stderr)
        return 0

    params = PotentialParams(a=args.a, b=args.b, delta=args.delta)
    if args.ordering:
        report = level_ordering_check(params, units, solver_config)
        records = [{"state": label, "energy": energy} for label, energy in report.energies.items()]
        _emit(render_records(records, ["state", "energy"], args.format))
        for violation in report.violations:
            print(f"ordering violated: {violation}", file=sys.stderr)
        return 0 if report.passed else VerificationBreach.exit_code
    if args.scan:
        if args.l is None:
            raise ParameterError("--scan needs --l")
        results = list(scan_spectrum(params, args.l, units, solver_config, count=args.scan))
    elif args.method == "matrix":
        results = [matrix_eigenvalue(params, _state(args), units, solver_config)]
    else:
        results = [solve_bound_state(params, _state(args), units, solver_config)]
    records = [result.to_dict() for result in results]
    _emit(render_records(records, ["state", "energy", "binding", "nodes", "converged", "residual", "method"], args.format))
    return 0


def cmd_wavefunction(args):
    """Sample the Coulomb and moderated ground-state wavefunctions on (0, r_max]."""
    units = _units(args)
    params = PotentialParams(a=args.a, b=args.b, delta=args.delta)
    n = args.n or 0
    if args.r_max <= 0 or args.samples < 1:
        raise ParameterError("--r-max must be positive and --samples at least 1")
    state = QuantumState(n=0, l=args.l)
    r = np.linspace(args.r_max / args.samples, args.r_max, args.samples)
    psi, valid = ground_state_wavefunction(params, args.l, r, units, normalize=args.normalize, n=n, with_mask=True)
    chi = CoulombWavefunction.from_params(params, state, units)(r)
    moderator = ground_state_moderator(params, args.l, units)
    u = moderating_factor(moderator, r)
    radius = validity_radius(moderator, CoulombWavefunction.from_params(params, state, units).beta)

    metadata = {
        "version": TOOL_VERSION,
        "state": state.label,
        "a": fmt_full(params.a),
        "b": fmt_full(params.b),
        "delta": fmt_full(params.delta),
        "units": units.to_dict(),
        "p2": fmt_full(moderator.p2),
        "p3": fmt_full(moderator.p3),
        "c": fmt_full(moderator.c),
        "validity_radius": "none" if radius is None else fmt_full(radius),
        "normalized": args.normalize,
    }
    columns = {"r": r, "chi": chi, "psi": psi, "u": u}
    if args.format == "json":
        data = {key: [float(v) for v in values] for key, values in columns.items()}
        data["valid"] = [bool(v) for v in valid]
        text = to_json({"metadata": metadata, "columns": data})
    else:
        frame = pd.DataFrame({key: [fmt_full(v) for v in values] for key, values in columns.items()})
        frame["valid"] = ["yes" if v else "no" for v in valid]
        text = metadata_header(metadata) + frame_to_csv(frame)
    _emit(text, args.output)
    return 0


def _add_units(parser):
    parser.add_argument("--hbar", type=float, default=DEFAULT_UNITS.hbar, help="Reduced Planck constant")
    parser.add_argument("--mass", type=float, default=DEFAULT_UNITS.mass, help="Particle mass")


def _add_solver(parser):
    parser.add_argument("--grid-points", type=int, help="Oracle logarithmic grid size")
    parser.add_argument("--energy-tol", type=float, help="Oracle grid-convergence tolerance")
    parser.add_argument("--r-max", dest="r_max", type=float, help="Oracle outer cutoff")
    parser.add_argument("--max-retries", type=int, help="Oracle retries with an enlarged box")


def build_parser():
    parser = argparse.ArgumentParser(description="Bound states of the Hellmann potential by perturbation theory.")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log progress to stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)

    energy = subparsers.add_parser("energy", help="Perturbative energy of one state")
    energy.add_argument("--a", type=float, default=2.0, help="Coulomb strength")
    energy.add_argument("--b", type=float, required=True, help="Yukawa strength")
    energy.add_argument("--delta", type=float, required=True, help="Screening parameter")
    energy.add_argument("--state", help="Spectroscopic label, e.g. 1s or 4f")
    energy.add_argument("--n", type=int, help="Radial quantum number (node count)")
    energy.add_argument("--l", type=int, help="Orbital angular momentum")
    energy.add_argument("--format", choices=FORMATS, default="text")
    energy.add_argument("--full-precision", action="store_true", help="Round-trip floats in text and csv")
    _add_units(energy)
    energy.set_defaults(handler=cmd_energy)

    table = subparsers.add_parser("table", help="Compute an energy table")
    source = table.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="Shipped preset name")
    source.add_argument("--config", help="key = value table configuration file")
    table.add_argument("--engine", choices=("perturbation", "oracle", "both"), help="Override the engine")
    table.add_argument("--output", "-o", help="Output directory (default: HELLMANN_RESULTS_DIR or results)")
    table.add_argument("--format", choices=FORMATS, default="text")
    table.add_argument("--strict", action="store_true", help="Fail on failed or untrusted cells")
    table.add_argument("--progress", action="store_true", help="Show a progress bar")
    _add_solver(table)
    table.set_defaults(handler=cmd_table)

    verify = subparsers.add_parser("verify", help="Cross-validate the closed forms")
    verify.add_argument("mode", nargs="?", choices=("quadrature", "oracle", "paper", "all"), default="all")
    verify.add_argument("--from-file", help="Recompute a saved table json and compare")
    verify.add_argument("--a", type=float, default=2.0, help="Coulomb strength")
    verify.add_argument("--b", type=float, nargs="+", help="Yukawa strengths")
    verify.add_argument("--delta", type=float, nargs="+", help="Screening parameters")
    verify.add_argument("--states", nargs="+", help="Spectroscopic labels")
    verify.add_argument("--rel-tol", type=float, help="Relative tolerance override")
    verify.add_argument("--strict", action="store_true", help="Untrusted oracle cells count as breaches")
    verify.add_argument("--format", choices=FORMATS, default="text")
    _add_units(verify)
    _add_solver(verify)
    verify.set_defaults(handler=cmd_verify)

    oracle = subparsers.add_parser("oracle", help="Direct eigenvalues of the exact potential")
    oracle.add_argument("--a", type=float, default=2.0, help="Coulomb strength (0 for the screened Coulomb potential)")
    oracle.add_argument("--b", type=float, default=-10.0, help="Yukawa strength")
    oracle.add_argument("--delta", type=float, default=0.01, help="Screening parameter")
    oracle.add_argument("--state", help="Spectroscopic label")
    oracle.add_argument("--n", type=int, help="Radial quantum number")
    oracle.add_argument("--l", type=int, help="Orbital angular momentum")
    oracle.add_argument("--method", choices=("numerov", "matrix"), default="numerov")
    oracle.add_argument("--scan", type=int, metavar="COUNT", help="Lowest COUNT levels at --l")
    oracle.add_argument("--ordering", action="store_true", help="Check level ordering within shells 1-4")
    oracle.add_argument("--crossings", nargs="+", metavar="A:B", help="State pairs to scan for crossings, e.g. 4s:3d")
    oracle.add_argument("--b-values", type=float, nargs="+", help="Yukawa strengths of a crossing scan")
    oracle.add_argument("--delta-values", type=float, nargs="+", help="Screening parameters of a crossing scan")
    oracle.add_argument("--format", choices=FORMATS, default="text")
    _add_units(oracle)
    _add_solver(oracle)
    oracle.set_defaults(handler=cmd_oracle)

    wavefunction = subparsers.add_parser("wavefunction", help="Sample the moderated ground-state wavefunction")
    wavefunction.add_argument("--a", type=float, default=2.0, help="Coulomb strength")
    wavefunction.add_argument("--b", type=float, required=True, help="Yukawa strength")
    wavefunction.add_argument("--delta", type=float, required=True, help="Screening parameter")
    wavefunction.add_argument("--l", type=int, default=0, help="Orbital angular momentum")
    wavefunction.add_argument("--n", type=int, default=0, help="Radial quantum number (only 0 is supported)")
    wavefunction.add_argument("--r-max", type=float, default=40.0, help="Largest sampled radius")
    wavefunction.add_argument("--samples", type=int, default=400, help="Number of radii")
    wavefunction.add_argument("--normalize", action="store_true", help="Rescale psi to unit norm")
    wavefunction.add_argument("--output", "-o", help="Output file (default: stdout)")
    wavefunction.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_units(wavefunction)
    wavefunction.set_defaults(handler=cmd_wavefunction)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except HellmannError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
