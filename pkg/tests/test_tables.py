"""
Tests for table configuration, generation, serialization and the published-value regression.
"""

import json

import pytest

from src.models.core import PotentialParams, QuantumState
from src.models.perturbation import total_energy
from src.utils import tables
from src.utils.errors import ConfigError, ConvergenceError
from src.utils.formatting import fmt_sig, render_table
from src.utils.preset_loader import PresetLoader, compare_published, printed_tolerance
from src.utils.tables import (
    TableResult,
    config_hash,
    generate_table,
    parse_config,
    recompute_mismatches,
    worker_count,
)

CONFIG = """
# two states against two Yukawa strengths
name = sample
states = 1s, 2p
b_values = -10, -1
delta_values = 0.01
a = 2
"""


@pytest.fixture(scope="module")
def loader():
    return PresetLoader()


class TestConfig:
    def test_parse(self):
        spec = parse_config(CONFIG)
        assert spec.name == "sample"
        assert spec.states == ("1s", "2p")
        assert spec.b_values == (-10.0, -1.0)
        assert spec.engine == "perturbation"
        assert spec.keys()[0] == ("1s", -10.0, 0.01)

    def test_canonical_text_round_trip(self):
        spec = parse_config(CONFIG)
        assert parse_config(spec.to_config_text()) == spec

    def test_overrides(self):
        assert parse_config(CONFIG, {"engine": "both"}).engine == "both"

    @pytest.mark.parametrize("text", [
        "states = 1s\nb_values = -1\ndelta_values = 0.01\ncolour = red",
        "states = 1s\nstates = 2s\nb_values = -1\ndelta_values = 0.01",
        "states = 1s\nb_values = -1",
        "states = 1s\nb_values = minus one\ndelta_values = 0.01",
        "states = 1s\nb_values = -1\ndelta_values = 0.01\nengine = guess",
        "states = 1x\nb_values = -1\ndelta_values = 0.01",
        "states = 1s\nb_values = 2, -1\ndelta_values = 0.01",
        "just some words",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_oracle_engine_allows_a_below_b(self):
        spec = parse_config("states = 1s\nb_values = 3\ndelta_values = 0.5\nengine = oracle")
        assert spec.engine == "oracle"

    def test_config_hash(self):
        spec = parse_config(CONFIG)
        assert config_hash(spec) == config_hash(parse_config(spec.to_config_text()))
        assert config_hash(spec) != config_hash(parse_config(CONFIG, {"a": "3"}))
        assert len(config_hash(spec)) == 64


class TestGeneration:
    def test_values(self):
        result = generate_table(parse_config(CONFIG), max_workers=1)
        expected = -total_energy(PotentialParams(a=2.0, b=-10.0, delta=0.01), QuantumState.parse("2p")).total
        assert result.cell("2p", -10, 0.01).value == expected
        assert result.metadata["cells"] == 4
        assert result.metadata["failed"] == 0

    def test_energy_sign_convention(self):
        result = generate_table(parse_config(CONFIG, {"sign_convention": "energy"}), max_workers=1)
        assert result.cell("1s", -10, 0.01).value < 0

    def test_deterministic_across_worker_counts(self, loader):
        spec = loader.get_preset("delta-0.1-scan")
        serial = generate_table(spec, max_workers=1)
        pooled = generate_table(spec, max_workers=4)
        assert json.dumps(serial.to_dict()) == json.dumps(pooled.to_dict())
        assert render_table(serial, "csv") == render_table(pooled, "csv")

    def test_oracle_cells_identical_in_process_pool(self):
        spec = parse_config("states = 1s, 2p\nb_values = -10, -1\ndelta_values = 0.05\nengine = oracle")
        solver_config = tables.SolverConfig(grid_points=4000, energy_tol=1e-7)
        serial = generate_table(spec, solver_config, max_workers=1)
        pooled = generate_table(spec, solver_config, max_workers=2)
        assert not pooled.failed
        assert [cell.value for cell in pooled.cells] == [cell.value for cell in serial.cells]
        assert [cell.state for cell in pooled.cells] == ["1s", "1s", "2p", "2p"]

    @pytest.mark.parametrize("preset, state, b, delta, printed", [
        ("b-10-scan", "2p", -10, 0.05, 8.51025),
        ("delta-0.01-scan", "3d", -20, 0.01, 13.2454),
        ("high-states", "7i", -10, 0.01, 0.638942),
        ("delta-0.1-scan", "6h", -50, 0.1, 14.1351),
    ])
    def test_preset_cells(self, loader, preset, state, b, delta, printed):
        result = generate_table(loader.get_preset(preset), max_workers=1)
        assert fmt_sig(result.cell(state, b, delta).value) == f"{printed:g}"

    def test_untrusted_cells_carry_ratios(self):
        spec = parse_config("states = 1s, 4f\nb_values = -10\ndelta_values = 0.3")
        result = generate_table(spec, max_workers=1)
        assert [cell.state for cell in result.untrusted] == ["4f"]
        assert set(result.untrusted[0].ratios) == {"shift/e0", "e1/e0", "e2/e1", "e3/e2"}
        assert result.metadata["untrusted"] == 1

    def test_failed_cells_are_recorded(self, monkeypatch):
        def failing_report(params, state, units):
            raise ConvergenceError("synthetic failure")

        monkeypatch.setattr(tables, "convergence_report", failing_report)
        result = generate_table(parse_config(CONFIG), max_workers=2)
        assert len(result.failed) == 4
        assert result.cells[0].error == "ConvergenceError: synthetic failure"

    def test_both_engines(self):
        spec = parse_config("states = 1s\nb_values = -10\ndelta_values = 0.001\nengine = both")
        result = generate_table(spec, solver_config=tables.SolverConfig(grid_points=4000, energy_tol=1e-7), max_workers=1)
        cell = result.cells[0]
        assert cell.oracle_energy == pytest.approx(-35.9900012499, rel=1e-5)
        assert cell.relative_gap < 1e-5
        assert result.metadata["solver"]["grid_points"] == 4000


class TestWorkers:
    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("HELLMANN_THREADS", "3")
        assert worker_count() == 3

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv("HELLMANN_THREADS", "many")
        assert 1 <= worker_count() <= 8


class TestSerialization:
    def test_save_load_recompute(self, tmp_path, loader):
        result = generate_table(loader.get_preset("b-10-scan"), max_workers=2)
        path = tmp_path / "b-10-scan.json"
        result.save(str(path))
        loaded = TableResult.load(str(path))
        assert loaded.to_dict() == result.to_dict()
        assert recompute_mismatches(loaded) == []

    def test_tampered_file_is_detected(self, tmp_path):
        result = generate_table(parse_config(CONFIG), max_workers=1)
        data = result.to_dict()
        data["cells"][1]["value"] += 1e-12
        path = tmp_path / "sample.json"
        path.write_text(json.dumps(data))
        mismatches = recompute_mismatches(TableResult.load(str(path)))
        assert len(mismatches) == 1
        assert mismatches[0]["field"] == "value"

    def test_csv_metadata_header(self):
        result = generate_table(parse_config(CONFIG), max_workers=1)
        text = render_table(result, "csv")
        lines = text.splitlines()
        assert lines[0] == f"# version: {tables.TOOL_VERSION}"
        assert any(line.startswith("# config_hash: ") for line in lines)
        assert "state,b,delta,value,trusted,error" in lines

    def test_text_pivot(self):
        result = generate_table(parse_config(CONFIG), max_workers=1)
        text = render_table(result, "text")
        assert "b=-10" in text and "b=-1" in text
        assert "2p" in text


class TestPublishedTables:
    @pytest.mark.parametrize("name, known", [
        ("b-10-scan", {("2s", -10.0, 0.05)}),
        ("delta-0.01-scan", set()),
        ("delta-0.1-scan", {("6g", -50.0, 0.1)}),
        ("high-states", {("7s", 1.0, 0.01), ("7p", 1.0, 0.01), ("7d", 1.0, 0.01)}),
    ])
    def test_regression(self, loader, name, known):
        records = compare_published(loader.get_published(name))
        assert not [r for r in records if r["status"] == "breach"]
        discrepancies = {(r["state"], r["b"], r["delta"]) for r in records if r["status"] == "known_discrepancy"}
        assert discrepancies == known

    def test_misprints_really_differ(self, loader):
        for name in loader.published:
            table = loader.get_published(name)
            for cell in table["known_discrepancies"]:
                params = PotentialParams(a=2.0, b=float(cell["b"]), delta=float(cell["delta"]))
                binding = -total_energy(params, QuantumState.parse(cell["state"])).total
                assert abs(binding - float(cell["printed"])) > printed_tolerance(cell["printed"])
                assert binding == pytest.approx(cell["computed"], rel=1e-6)

    def test_coulomb_row(self, loader):
        records = compare_published(loader.get_published("delta-0.01-scan"))
        row = {r["state"]: r["computed"] for r in records if r["b"] == 0.0}
        assert row["1s"] == 1.0
        assert row["2s"] == row["2p"] == 0.25
        assert row["3s"] == pytest.approx(1.0 / 9.0, rel=1e-15)
