"""
PresetLoader module for the shipped table presets and the published table values.
"""

import json
import logging
import os

from src.models.core import DEFAULT_UNITS, PotentialParams, QuantumState
from src.models.perturbation import total_energy
from src.utils.errors import ConfigError, HellmannError
from src.utils.tables import load_config

logger = logging.getLogger(__name__)

DEFAULT_DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


class PresetLoader:
    """
    Loads table presets (key-value .cfg files) and published tables (json files).
    """

    def __init__(self, data_dir=DEFAULT_DATA_DIR):
        """
        Initialize the loader.

        Args:
            data_dir (str): Directory holding presets/ and paper_tables/
        """
        self.data_dir = data_dir
        self.presets = self._load_presets()
        self.published = self._load_published()

    def list_presets(self):
        return sorted(self.presets)

    def get_preset(self, name):
        """
        Get a preset table specification.

        Args:
            name (str): Preset name; case-insensitive, unique prefixes accepted

        Returns:
            TableSpec: The preset
        """
        if name in self.presets:
            return self.presets[name]
        lowered = name.lower()
        for preset_name, spec in self.presets.items():
            if preset_name.lower() == lowered:
                return spec
        matches = [preset_name for preset_name in self.presets if preset_name.lower().startswith(lowered)]
        if len(matches) == 1:
            return self.presets[matches[0]]
        raise ConfigError(f"Unknown preset '{name}'. Available presets: {', '.join(self.list_presets())}")

    def get_published(self, name):
        """
        Get the published values of a table.

        Returns:
            dict: Table with "cells" and "known_discrepancies"
        """
        if name not in self.published:
            raise ConfigError(f"No published values for '{name}'")
        return self.published[name]

    def _load_presets(self):
        presets_dir = os.path.join(self.data_dir, "presets")
        presets = {}
        if not os.path.isdir(presets_dir):
            logger.warning(f"Preset directory not found: {presets_dir}")
            return presets
        for filename in sorted(os.listdir(presets_dir)):
            if not filename.endswith(".cfg"):
                continue
            path = os.path.join(presets_dir, filename)
            try:
                spec = load_config(path)
                presets[spec.name] = spec
            except (OSError, HellmannError) as e:
                logger.error(f"Error loading preset {path}: {e}")
        logger.info(f"Loaded {len(presets)} table presets from {presets_dir}")
        return presets

    def _load_published(self):
        tables_dir = os.path.join(self.data_dir, "paper_tables")
        tables = {}
        if not os.path.isdir(tables_dir):
            logger.warning(f"Published table directory not found: {tables_dir}")
            return tables
        for filename in sorted(os.listdir(tables_dir)):
            if not filename.endswith(".json"):
                continue
            path = os.path.join(tables_dir, filename)
            try:
                with open(path, "r") as f:
                    table = json.load(f)
                tables[table["name"]] = table
            except (OSError, ValueError, KeyError) as e:
                logger.error(f"Error loading published table {path}: {e}")
        return tables


def printed_tolerance(printed):
    """
    Agreement window for a printed value: half a unit in its last significant digit.

    Trailing zeros of the fractional part count as padding ("13.2460" reads as 13.246).

    Example:
        >>> printed_tolerance("35.0124")
        5e-05
        >>> printed_tolerance("0.0671090")
        5e-07
    """
    text = printed.strip()
    fraction = text.split(".", 1)[1] if "." in text else ""
    stripped = fraction.rstrip("0") or fraction[:1]
    return 0.5 * 10.0 ** (-len(stripped))


def _cell_key(cell):
    return (cell["state"], float(cell["b"]), float(cell["delta"]))


def compare_published(table, units=DEFAULT_UNITS):
    """
    Compare every published cell with the perturbative binding energy.

    Args:
        table (dict): Published table from PresetLoader
        units (UnitSystem): Unit system

    Returns:
        list: One record per cell with status "match", "known_discrepancy" or "breach"
    """
    known = {_cell_key(cell): cell for cell in table.get("known_discrepancies", [])}
    records = []
    for cell in table["cells"]:
        state, b, delta = _cell_key(cell)
        params = PotentialParams(a=float(table["a"]), b=b, delta=delta)
        computed = -total_energy(params, QuantumState.parse(state), units).total
        printed = float(cell["printed"])
        tolerance = printed_tolerance(cell["printed"])
        deviation = abs(computed - printed)
        if deviation <= tolerance * (1.0 + 1e-9):
            status = "match"
        elif (state, b, delta) in known:
            status = "known_discrepancy"
        else:
            status = "breach"
        records.append({
            "table": table["name"],
            "state": state,
            "b": b,
            "delta": delta,
            "printed": cell["printed"],
            "computed": computed,
            "deviation": deviation,
            "tolerance": tolerance,
            "status": status,
        })
    unexpected = [key for key in known if not any(
        (r["state"], r["b"], r["delta"]) == key and r["status"] == "known_discrepancy" for r in records
    )]
    if unexpected:
        logger.warning(f"{table['name']}: listed discrepancies now agree or are missing: {unexpected}")
    return records
