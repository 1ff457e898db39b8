import json

import numpy as np
import pytest

from batch_runner import (BatchRunner, RunManifest, estimate_one, input_files, inspect_one,
                          load_hamiltonian, summary_frame, write_report)
from tests.conftest import FIXTURES
from zulf_engine.errors import ConfigurationError, DomainError
from zulf_engine.oracle.dense_oracle import dense_matrix


def test_manifest_round_trip_is_byte_stable():
    manifest = RunManifest(inputs=[str(FIXTURES / "methane.mol")], nucleus_set="hetero", dipolar="rdc",
                           kappa=2e-3, r_cut=3.5, max_bond_separation=3, input_format="mol",
                           budget={"t2": 0.5, "t_max_factor": 4.0, "n_points": 50,
                                   "error_model": "n-scaled"},
                           machines=["ge", "custom:1e6"])
    text = manifest.to_json()
    back = RunManifest.from_json(text)
    assert back == manifest
    assert back.to_json() == text
    assert text.endswith("}\n")
    regime = back.regime_config()
    assert (regime.kappa, regime.r_cut, regime.max_bond_separation) == (2e-3, 3.5, 3)
    budget = back.validate().simulation_budget()
    assert budget.t_max == pytest.approx(2.0)
    assert budget.error_model.value == "n-scaled"


def test_manifest_validation():
    with pytest.raises(ConfigurationError):
        RunManifest(budget={"t_min": 1.0}).validate()
    with pytest.raises(ConfigurationError):
        RunManifest(inputs=["/nonexistent/file.mol"]).validate()
    with pytest.raises(ConfigurationError):
        RunManifest.from_json('{"inputs": [], "colour": "red"}')
    with pytest.raises(ConfigurationError):
        RunManifest.from_json("{not json")
    with pytest.raises(DomainError):
        RunManifest(budget={"n_points": 0}).validate()
    with pytest.raises(DomainError):
        RunManifest(kappa=0.0).validate()
    with pytest.raises(DomainError):
        RunManifest(r_cut=-1.0).validate()
    with pytest.raises(DomainError):
        RunManifest(input_format="pdb").validate()
    with pytest.raises(DomainError):
        RunManifest(budget={"t_max": 2.0, "t_max_factor": 3.0}).validate()


def test_input_files_are_sorted_and_filtered(tmp_path):
    (tmp_path / "b.xyz").write_text("1\nx\nH 0 0 0\n")
    (tmp_path / "a.ham").write_text("n_spins 1\n1.0 0:Z\n")
    (tmp_path / "notes.txt").write_text("ignore me")
    assert [p.name for p in input_files([str(tmp_path)])] == ["a.ham", "b.xyz"]


def test_load_hamiltonian_accepts_text_format(hc_pair):
    assert load_hamiltonian(FIXTURES / "hc_pair.ham", RunManifest()) == hc_pair


def test_input_format_overrides_the_suffix(tmp_path):
    renamed = tmp_path / "water.txt"
    renamed.write_text((FIXTURES / "water.xyz").read_text())
    assert load_hamiltonian(renamed, RunManifest(input_format="xyz")).n_spins == 2
    with pytest.raises(DomainError):
        load_hamiltonian(renamed, RunManifest())
    assert input_files([str(renamed)]) == [renamed]


def test_regime_parameters_reach_the_hamiltonian():
    path = FIXTURES / "methane.mol"
    assert load_hamiltonian(path, RunManifest(max_bond_separation=1)).n_terms == 0
    plain = load_hamiltonian(path, RunManifest())
    weak = dense_matrix(load_hamiltonian(path, RunManifest(dipolar="rdc")))
    strong = dense_matrix(load_hamiltonian(path, RunManifest(dipolar="rdc", kappa=2e-3)))
    np.testing.assert_allclose(strong - dense_matrix(plain), 2 * (weak - dense_matrix(plain)), atol=1e-9)
    clipped = load_hamiltonian(path, RunManifest(dipolar="rdc", r_cut=1.0))
    assert clipped.terms == plain.terms


def test_error_model_reaches_the_aggregate():
    path = FIXTURES / "methane.mol"
    budget = {"t2": 1000.0, "n_points": 20}
    capped = estimate_one(path, RunManifest(budget=budget, threshold=1, physical=False))
    scaled = estimate_one(path, RunManifest(budget=dict(budget, error_model="n-scaled"),
                                            threshold=1, physical=False))
    assert scaled["aggregate"]["n_T_aggregate"] < capped["aggregate"]["n_T_aggregate"]


def test_inspect_one_reports_clusters():
    report = inspect_one(FIXTURES / "methane.mol", RunManifest(nucleus_set="hetero"))
    assert report["cluster_sizes"] == [5]
    assert report["clusters"][0]["molecule"] == "methane.mol"
    assert report["n_terms"] == 30


def test_estimate_one_for_small_molecule():
    manifest = RunManifest(budget={"n_points": 20})
    report = estimate_one(FIXTURES / "methane.mol", manifest)
    assert report["single_shot_max"]["degree"] == 464
    assert report["below_small_molecule_band"]
    assert report["aggregate"]["empty"]
    phys = report["physical"]
    assert phys["feasible"]
    assert phys["total_shots"] == 20 * 10_000
    assert [m["name"] for m in phys["machines"]] == ["ge", "fh128", "minimal"]
    assert phys["machines"][2]["concurrency"] == 1


def test_batch_keeps_going_past_broken_inputs():
    runner = BatchRunner(RunManifest(inputs=[str(FIXTURES)]), workers=1)
    report = runner.run("inspect")
    assert [f["molecule"] for f in report["failures"]] == ["broken.mol"]
    names = [m["molecule"] for m in report["molecules"]]
    assert names == sorted(names) and "methane.mol" in names
    assert "out_dir" not in report["manifest"]
    frame = summary_frame(report)
    assert set(frame["molecule"]) == set(names)


def test_unknown_batch_command():
    with pytest.raises(DomainError):
        BatchRunner(RunManifest(), workers=1).run("simulate")


def test_write_report_targets(tmp_path):
    report = BatchRunner(RunManifest(inputs=[str(FIXTURES / "h2.xyz")]), workers=1).run("inspect")
    path = write_report(report, tmp_path, "json")
    assert path.name == "inspect.json"
    assert json.loads(path.read_text())["molecules"][0]["cluster_sizes"] == [2]
    csv_path = write_report(report, tmp_path / "summary.csv", "csv")
    assert csv_path.read_text().splitlines()[0].startswith("molecule,cluster")
