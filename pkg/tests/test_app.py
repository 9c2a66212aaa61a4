import importlib
import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from app import cli
from models.field import SampledField
from services.cauchy_service import disk_indicator_field
from utils.file_utils import read_json, read_table


def _config(tmp_path, scenario, params=None, seed=0):
    path = tmp_path / f"{scenario}.json"
    path.write_text(json.dumps({
        "scenario": scenario, "seed": seed, "output_dir": str(tmp_path / "runs"), "params": params or {},
    }))
    return str(path)


def _run(*args):
    return CliRunner().invoke(cli, list(args))


def _only_run_dir(tmp_path):
    (name,) = os.listdir(tmp_path / "runs")
    return str(tmp_path / "runs" / name)


# ---------------- validate ----------------
def test_validate_prints_the_parameters(tmp_path):
    result = _run("validate", _config(tmp_path, "kobayashi", {"pairs": 3}))
    assert result.exit_code == 0
    assert "scenario kobayashi" in result.output
    assert "pairs = 3" in result.output


def test_unknown_scenario_is_a_usage_error(tmp_path):
    result = _run("validate", _config(tmp_path, "teleport"))
    assert result.exit_code == 2
    assert "teleport" in result.output


def test_missing_files_exit_with_the_configuration_code(tmp_path):
    result = _run("run", _config(tmp_path, "chirka-extend", {"motion_file": "nowhere.json"}))
    assert result.exit_code == 2
    assert "nowhere.json" in result.output
    result = _run("validate", str(tmp_path / "absent.json"))
    assert result.exit_code == 2


def test_errors_map_to_exit_codes(tmp_path):
    result = _run("run", _config(tmp_path, "kobayashi", {"pairs": 1, "chain_length": 0}))
    assert result.exit_code == 2
    result = _run("run", _config(tmp_path, "fatou", {"coefficients": [1, 0]}))
    assert result.exit_code == 2
    assert "NotParabolicError" in result.output
    params = {"grid_nodes": 3, "mesh_nodes": 24, "radius_fraction": 3.0, "parameters": 2}
    result = _run("run", _config(tmp_path, "qc-audit", params))
    assert result.exit_code == 3
    assert "DomainError" in result.output


# ---------------- run / report ----------------
def test_kobayashi_run_writes_tables_and_manifest(tmp_path):
    result = _run("run", _config(tmp_path, "kobayashi", {"pairs": 4, "chain_length": 2}, seed=5))
    assert result.exit_code == 0, result.output
    run_dir = _only_run_dir(tmp_path)
    names, rows = read_table(os.path.join(run_dir, "distances.csv"))
    assert names == ["pair", "d_1", "d_n", "d_T_rep", "monotone"]
    assert len(rows) == 4
    for row in rows:
        assert float(row[2]) <= float(row[3]) + 1e-12
    with open(os.path.join(run_dir, "distances.csv")) as f:
        assert f.readline().strip() == "# seed=5 scenario=kobayashi"
    manifest = read_json(os.path.join(run_dir, "manifest.json"))
    assert manifest["seed"] == 5
    assert manifest["config"]["params"] == {"pairs": 4, "chain_length": 2}
    assert set(manifest["digests"]) == {"distances.csv"}
    assert manifest["versions"]["numpy"]
    assert manifest["wall_time"] >= 0


def test_report_detects_edited_outputs(tmp_path):
    _run("run", _config(tmp_path, "kobayashi", {"pairs": 2, "chain_length": 2}))
    run_dir = _only_run_dir(tmp_path)
    result = _run("report", run_dir)
    assert result.exit_code == 0
    assert "1 files match" in result.output
    with open(os.path.join(run_dir, "distances.csv"), "a") as f:
        f.write("tampered\n")
    result = _run("report", run_dir)
    assert result.exit_code == 1
    assert "distances.csv" in result.output
    assert _run("report", str(tmp_path)).exit_code == 2


def test_reruns_are_bit_identical(tmp_path):
    path = _config(tmp_path, "kobayashi", {"pairs": 3, "chain_length": 2}, seed=11)
    assert _run("run", path).exit_code == 0
    assert _run("run", path).exit_code == 0
    runs = sorted(os.listdir(tmp_path / "runs"))
    digests = [read_json(str(tmp_path / "runs" / name / "manifest.json"))["digests"] for name in runs]
    assert digests[0] == digests[1]
    assert runs == ["kobayashi-seed11", "kobayashi-seed11_1"]


def test_seed_flag_changes_the_draws(tmp_path):
    path = _config(tmp_path, "kobayashi", {"pairs": 3, "chain_length": 1}, seed=1)
    _run("run", path)
    _run("run", path, "--seed", "2")
    first = read_json(str(tmp_path / "runs" / "kobayashi-seed1" / "manifest.json"))["digests"]
    second = read_json(str(tmp_path / "runs" / "kobayashi-seed2" / "manifest.json"))["digests"]
    assert first != second


def test_cauchy_scenario_reads_and_writes_fields(tmp_path):
    source = disk_indicator_field(24)
    source.values *= 0.5j
    source.save(str(tmp_path / "half_disk"))
    params = {"field_file": "half_disk.json", "targets": 10, "fields": 1, "field_nodes": 16}
    result = _run("run", _config(tmp_path, "cauchy-modulus", params))
    assert result.exit_code == 0, result.output
    run_dir = _only_run_dir(tmp_path)
    names, rows = read_table(os.path.join(run_dir, "transform.csv"))
    assert names == ["c_re", "c_im", "Pf_re", "Pf_im"]
    assert len(rows) == 10
    written = SampledField.load(os.path.join(run_dir, "field.json"))
    np.testing.assert_array_equal(written.values, source.values)
    manifest = read_json(os.path.join(run_dir, "manifest.json"))
    assert {"field.json", "field.csv"} <= set(manifest["digests"])


def test_cauchy_scenario_needs_both_field_files(tmp_path):
    disk_indicator_field(8).save(str(tmp_path / "broken"))
    os.remove(tmp_path / "broken.csv")
    result = _run("run", _config(tmp_path, "cauchy-modulus", {"field_file": "broken.json", "fields": 1}))
    assert result.exit_code == 2
    assert "broken.csv" in result.output


def test_fatou_scenario_outputs(tmp_path):
    result = _run("run", _config(tmp_path, "fatou", {"m_max": 3, "orbit_steps": 20}))
    assert result.exit_code == 0, result.output
    run_dir = _only_run_dir(tmp_path)
    chart = read_json(os.path.join(run_dir, "chart.json"))
    assert chart["F(2)"] == "4"
    assert chart["tau"] == 6.0
    names, rows = read_table(os.path.join(run_dir, "convergence.csv"))
    assert names == ["m", "difference", "beltrami_sup"]
    assert [row[0] for row in rows] == ["1", "2", "3"]
    names, rows = read_table(os.path.join(run_dir, "residuals.csv"))
    assert names == ["w_re", "w_im", "Psi_re", "Psi_im", "residual"]
    assert len(rows) == 20
    _, rows = read_table(os.path.join(run_dir, "orbit.csv"))
    assert len(rows) == 21


# ---------------- acceptance suite ----------------
def test_acceptance_subset_passes(tmp_path):
    result = _run("run", _config(tmp_path, "acceptance-suite", {"criteria": [10, 11], "pairs": 5}))
    assert result.exit_code == 0, result.output
    run_dir = _only_run_dir(tmp_path)
    names, rows = read_table(os.path.join(run_dir, "acceptance.csv"))
    assert names == ["criterion", "passed", "value", "threshold"]
    assert [row[0] for row in rows] == [
        "10.origin", "10.scalar", "10.monotone", "10.representative", "11.determinism",
    ]
    assert all(row[1] == "true" for row in rows)


def test_acceptance_failures_exit_with_one(tmp_path):
    params = {"criteria": [10], "pairs": 2, "thresholds": {"closed_form": -1.0}}
    result = _run("run", _config(tmp_path, "acceptance-suite", params))
    assert result.exit_code == 1
    assert "10.origin" in result.output


@pytest.mark.parametrize("criteria", [[12], ["x"]])
def test_acceptance_rejects_unknown_criteria(tmp_path, criteria):
    result = _run("run", _config(tmp_path, "acceptance-suite", {"criteria": criteria}))
    assert result.exit_code == 2


# ---------------- module surface ----------------
@pytest.mark.parametrize("module, name", [
    ("utils.sphere_utils", "cross_ratio_array"),
    ("utils.quadrature_utils", "plane_integral"),
    ("routes.scenario_routes", "get_scenario"),
])
def test_unused_helpers_are_gone(module, name):
    assert not hasattr(importlib.import_module(module), name)


def test_unused_methods_are_gone():
    from models.germ import FatouCoordinate, PetalChart
    from utils.sphere_utils import MobiusMap

    assert not hasattr(MobiusMap, "apply")
    assert not hasattr(PetalChart, "in_region")
    assert not hasattr(FatouCoordinate, "rows")
