"""
Declarative energy tables: a grid of (state, b, delta) cells and its computed values.
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import pandas as pd
from tqdm import tqdm

from src.models.core import PotentialParams, QuantumState, UnitSystem
from src.models.oracle import SolverConfig, solve_bound_state
from src.models.perturbation import convergence_report
from src.utils.errors import ConfigError, HellmannError

logger = logging.getLogger(__name__)

TOOL_VERSION = "1.0.0"

ENGINES = ("perturbation", "oracle", "both")
SIGN_CONVENTIONS = ("binding", "energy")
CONFIG_KEYS = ("name", "states", "b_values", "delta_values", "a", "engine", "sign_convention", "hbar", "mass")


@dataclass(frozen=True)
class TableSpec:
    """
    A grid of states against Yukawa strengths and screening parameters.

    Args:
        states (tuple): Spectroscopic labels, in output order
        b_values (tuple): Yukawa strengths
        delta_values (tuple): Screening parameters
        a (float): Coulomb strength
        engine (str): "perturbation", "oracle" or "both"
        sign_convention (str): "binding" prints -E, "energy" prints E
        name (str): Table name used in file names and metadata
        hbar (float): Unit system action constant
        mass (float): Unit system mass
    """

    states: tuple
    b_values: tuple
    delta_values: tuple
    a: float = 2.0
    engine: str = "perturbation"
    sign_convention: str = "binding"
    name: str = "custom"
    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "b_values", tuple(float(b) for b in self.b_values))
        object.__setattr__(self, "delta_values", tuple(float(d) for d in self.delta_values))
        if not self.states:
            raise ConfigError("Table needs at least one state")
        if not self.b_values or not self.delta_values:
            raise ConfigError("Table needs at least one b value and one delta value")
        if self.engine not in ENGINES:
            raise ConfigError(f"Unknown engine '{self.engine}', expected one of {', '.join(ENGINES)}")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ConfigError(f"Unknown sign convention '{self.sign_convention}'")
        if self.engine != "oracle" and self.a <= max(self.b_values):
            raise ConfigError(f"Perturbative tables need a > max(b), got a={self.a}, max(b)={max(self.b_values)}")
        for label in self.states:
            try:
                QuantumState.parse(label)
            except HellmannError as e:
                raise ConfigError(str(e)) from e

    @property
    def units(self):
        return UnitSystem(hbar=self.hbar, mass=self.mass)

    def keys(self):
        """Cell keys in output order: state, then b, then delta."""
        return [(state, b, d) for state in self.states for b in self.b_values for d in self.delta_values]

    def to_config_text(self):
        """Canonical flat key-value serialization."""
        values = {
            "name": self.name,
            "states": ", ".join(self.states),
            "b_values": ", ".join(repr(b) for b in self.b_values),
            "delta_values": ", ".join(repr(d) for d in self.delta_values),
            "a": repr(float(self.a)),
            "engine": self.engine,
            "sign_convention": self.sign_convention,
            "hbar": repr(float(self.hbar)),
            "mass": repr(float(self.mass)),
        }
        return "".join(f"{key} = {values[key]}\n" for key in CONFIG_KEYS)

    def to_dict(self):
        return {
            "name": self.name,
            "states": list(self.states),
            "b_values": list(self.b_values),
            "delta_values": list(self.delta_values),
            "a": self.a,
            "engine": self.engine,
            "sign_convention": self.sign_convention,
            "hbar": self.hbar,
            "mass": self.mass,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**{key: data[key] for key in CONFIG_KEYS if key in data})


def _parse_list(text, key):
    items = [item.strip() for item in text.split(",") if item.strip()]
    if key == "states":
        return items
    try:
        return [float(item) for item in items]
    except ValueError as e:
        raise ConfigError(f"{key}: expected comma-separated numbers, got '{text}'") from e


def parse_config(text, overrides=None):
    """
    Parse a flat `key = value` table configuration.

    Blank lines and lines starting with '#' are ignored; list values are comma-separated.

    Args:
        text (str): Configuration text
        overrides (dict, optional): Values taking precedence over the text

    Returns:
        TableSpec: The parsed specification
    """
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got '{raw}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {number}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {number}: duplicate key '{key}'")
        values[key] = value
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    missing = [key for key in ("states", "b_values", "delta_values") if key not in values]
    if missing:
        raise ConfigError(f"Missing keys: {', '.join(missing)}")
    parsed = {}
    for key, value in values.items():
        if key in ("states", "b_values", "delta_values") and isinstance(value, str):
            parsed[key] = _parse_list(value, key)
        elif key in ("a", "hbar", "mass"):
            try:
                parsed[key] = float(value)
            except ValueError as e:
                raise ConfigError(f"{key}: expected a number, got '{value}'") from e
        else:
            parsed[key] = value
    return TableSpec(**parsed)


def load_config(path, overrides=None):
    with open(path, "r") as f:
        return parse_config(f.read(), overrides)


def config_hash(spec, solver_config=None):
    """sha256 over the canonical spec text and the solver settings that affect the values."""
    payload = spec.to_config_text()
    if spec.engine != "perturbation":
        payload += json.dumps((solver_config or SolverConfig()).to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class TableCell:
    """One (state, b, delta) cell and everything computed for it."""

    state: str
    b: float
    delta: float
    value: float = None
    breakdown: dict = None
    oracle_energy: float = None
    trusted: bool = None
    ratios: dict = None
    relative_gap: float = None
    error: str = None

    def to_dict(self):
        return {
            "state": self.state,
            "b": self.b,
            "delta": self.delta,
            "value": self.value,
            "breakdown": self.breakdown,
            "oracle_energy": self.oracle_energy,
            "trusted": self.trusted,
            "ratios": self.ratios,
            "relative_gap": self.relative_gap,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class TableResult:
    """Computed cells of a TableSpec plus the metadata needed to recompute them."""

    spec: TableSpec
    cells: list
    metadata: dict = field(default_factory=dict)

    def cell(self, state, b, delta):
        for cell in self.cells:
            if cell.state == state and cell.b == float(b) and cell.delta == float(delta):
                return cell
        raise KeyError((state, b, delta))

    @property
    def failed(self):
        return [cell for cell in self.cells if cell.error]

    @property
    def untrusted(self):
        return [cell for cell in self.cells if cell.trusted is False]

    def to_dict(self):
        return {
            "metadata": self.metadata,
            "spec": self.spec.to_dict(),
            "cells": [cell.to_dict() for cell in self.cells],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            spec=TableSpec.from_dict(data["spec"]),
            cells=[TableCell.from_dict(cell) for cell in data["cells"]],
            metadata=data.get("metadata", {}),
        )

    def to_frame(self):
        """One row per cell."""
        rows = []
        for cell in self.cells:
            row = {"state": cell.state, "b": cell.b, "delta": cell.delta, "value": cell.value}
            if self.spec.engine == "both":
                row["oracle"] = None if cell.oracle_energy is None else self._signed(cell.oracle_energy)
                row["relative_gap"] = cell.relative_gap
            row["trusted"] = cell.trusted
            row["error"] = cell.error
            rows.append(row)
        return pd.DataFrame(rows)

    def pivot(self):
        """States as rows against whichever of b or delta varies (both when both vary)."""
        frame = self.to_frame()
        if len(self.spec.delta_values) == 1:
            frame["column"] = frame["b"].map(lambda b: f"b={b:g}")
            order = [f"b={b:g}" for b in self.spec.b_values]
        elif len(self.spec.b_values) == 1:
            frame["column"] = frame["delta"].map(lambda d: f"delta={d:g}")
            order = [f"delta={d:g}" for d in self.spec.delta_values]
        else:
            frame["column"] = [f"b={b:g},delta={d:g}" for b, d in zip(frame["b"], frame["delta"])]
            order = [f"b={b:g},delta={d:g}" for b in self.spec.b_values for d in self.spec.delta_values]
        table = frame.pivot(index="state", columns="column", values="value")
        return table.reindex(index=list(self.spec.states), columns=order)

    def _signed(self, energy):
        return -energy if self.spec.sign_convention == "binding" else energy

    def save(self, filename):
        """Write the result as json."""
        os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
        with open(filename, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, filename):
        with open(filename, "r") as f:
            return cls.from_dict(json.load(f))


def _process_cell(spec, key, solver_config):
    state_label, b, delta = key
    state = QuantumState.parse(state_label)
    cell = TableCell(state=state_label, b=b, delta=delta)
    sign = -1.0 if spec.sign_convention == "binding" else 1.0
    try:
        params = PotentialParams(a=spec.a, b=b, delta=delta)
        if spec.engine in ("perturbation", "both"):
            report = convergence_report(params, state, spec.units)
            cell.breakdown = report.breakdown.to_dict()
            cell.trusted = report.trusted
            cell.ratios = report.ratios
            cell.value = sign * report.breakdown.total
        if spec.engine in ("oracle", "both"):
            result = solve_bound_state(params, state, spec.units, solver_config)
            cell.oracle_energy = result.energy
            if spec.engine == "oracle":
                cell.value = sign * result.energy
            else:
                cell.relative_gap = abs(report.breakdown.total - result.energy) / abs(result.energy)
    except HellmannError as e:
        logger.error(f"Cell {state_label}, b={b}, delta={delta} failed: {e}")
        cell.error = f"{type(e).__name__}: {e}"
    return cell


def worker_count():
    """Worker cap from HELLMANN_THREADS, defaulting to min(8, cpu count)."""
    value = os.getenv("HELLMANN_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring invalid HELLMANN_THREADS='{value}'")
    return min(8, os.cpu_count() or 1)


def generate_table(spec, solver_config=None, max_workers=None, progress=False):
    """
    Compute every cell of a table.

    Tables with oracle cells run on a bounded process pool; perturbation-only tables
    are filled in-process. The result lists cells in spec order regardless of
    completion order. Per-cell failures are recorded in the cell.

    Args:
        spec (TableSpec): What to compute
        solver_config (SolverConfig, optional): Oracle settings
        max_workers (int, optional): Pool size, HELLMANN_THREADS when omitted
        progress (bool): Show a tqdm progress bar

    Returns:
        TableResult: Cells and metadata
    """
    solver_config = solver_config or SolverConfig()
    keys = spec.keys()
    workers = max_workers or worker_count()
    cells = {}
    if workers == 1 or len(keys) == 1 or spec.engine == "perturbation":
        for key in tqdm(keys, desc=f"Table {spec.name}", disable=not progress):
            cells[key] = _process_cell(spec, key, solver_config)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(keys))) as executor:
            futures = {executor.submit(_process_cell, spec, key, solver_config): key for key in keys}
            for future in tqdm(as_completed(futures), total=len(futures), desc=f"Table {spec.name}", disable=not progress):
                cells[futures[future]] = future.result()
    result = TableResult(spec=spec, cells=[cells[key] for key in keys])
    result.metadata = {
        "version": TOOL_VERSION,
        "name": spec.name,
        "units": spec.units.to_dict(),
        "engine": spec.engine,
        "sign_convention": spec.sign_convention,
        "config_hash": config_hash(spec, solver_config),
        "solver": solver_config.to_dict() if spec.engine != "perturbation" else None,
        "cells": len(keys),
        "failed": len(result.failed),
        "untrusted": len(result.untrusted),
    }
    logger.info(
        f"Table {spec.name}: {len(keys)} cells, {len(result.failed)} failed, {len(result.untrusted)} untrusted"
    )
    return result


def recompute_mismatches(result, solver_config=None):
    """
    Recompute a saved table and list cells whose values differ.

    Perturbative values must match exactly; oracle values within ten times the solver
    tolerance.

    Returns:
        list: Mismatch records, empty when the file re-validates
    """
    if solver_config is None and result.metadata.get("solver"):
        solver_config = SolverConfig(**result.metadata["solver"])
    fresh = generate_table(result.spec, solver_config, max_workers=1)
    tolerance = 10.0 * (solver_config or SolverConfig()).energy_tol
    mismatches = []
    for saved, cell in zip(result.cells, fresh.cells):
        if (saved.error is None) != (cell.error is None):
            mismatches.append({"state": saved.state, "b": saved.b, "delta": saved.delta, "saved": saved.error, "fresh": cell.error})
            continue
        if saved.error:
            continue
        for name in ("value", "oracle_energy"):
            old, new = getattr(saved, name), getattr(cell, name)
            if old is None and new is None:
                continue
            exact = name == "value" and result.spec.engine != "oracle"
            if old is None or new is None:
                differs = True
            elif exact:
                differs = old != new
            else:
                differs = abs(old - new) > tolerance * max(1.0, abs(new))
            if differs:
                mismatches.append({"state": saved.state, "b": saved.b, "delta": saved.delta, "field": name, "saved": old, "fresh": new})
    return mismatches


def with_engine(spec, engine):
    return replace(spec, engine=engine)
