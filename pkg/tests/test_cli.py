import json

import pandas as pd
import pytest

from batch_runner import RunManifest
from main import EXIT_FATAL, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARTIAL, main
from tests.conftest import FIXTURES
from zulf_engine.core.spin_hamiltonian import hamiltonian_from_text


def test_inspect_methane(tmp_path):
    code = main(["inspect", str(FIXTURES / "methane.mol"), "--workers", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "inspect.json").read_text())
    assert report["molecules"][0]["cluster_sizes"] == [4]
    assert report["failures"] == []


def test_empty_directory_is_not_an_error(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["inspect", str(empty), "--workers", "1", "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert json.loads((tmp_path / "r.json").read_text())["molecules"] == []


def test_broken_input_gives_partial_exit(tmp_path):
    code = main(["inspect", str(FIXTURES), "--workers", "1", "--out", str(tmp_path)])
    assert code == EXIT_PARTIAL
    report = json.loads((tmp_path / "inspect.json").read_text())
    assert report["failures"][0]["molecule"] == "broken.mol"


def test_input_format_flag_overrides_the_suffix(tmp_path):
    renamed = tmp_path / "water.txt"
    renamed.write_text((FIXTURES / "water.xyz").read_text())
    args = ["inspect", str(renamed), "--workers", "1"]
    assert main(args + ["--input-format", "xyz", "--out", str(tmp_path / "a.json")]) == EXIT_OK
    report = json.loads((tmp_path / "a.json").read_text())
    assert report["molecules"][0]["cluster_sizes"] == [2]
    assert report["manifest"]["input_format"] == "xyz"
    assert main(args + ["--out", str(tmp_path / "b.json")]) == EXIT_PARTIAL


def test_regime_flags_reach_the_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["inspect", str(FIXTURES / "methane.mol"), "--max-bonds", "1", "--kappa", "2e-3",
                 "--r-cut", "4.0", "--workers", "1", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["molecules"][0]["cluster_sizes"] == []
    assert (report["manifest"]["max_bond_separation"], report["manifest"]["kappa"],
            report["manifest"]["r_cut"]) == (1, 2e-3, 4.0)


def test_budget_flags_reach_the_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["estimate", str(FIXTURES / "h2.xyz"), "--t2", "0.5", "--t-max-factor", "4",
                 "--error-model", "n-scaled", "--points", "10", "--no-physical", "--workers", "1",
                 "--out", str(out)]) == EXIT_OK
    budget = json.loads(out.read_text())["manifest"]["budget"]
    assert budget["error_model"] == "n-scaled"
    assert budget["t_max_factor"] == 4.0
    assert main(["estimate", str(FIXTURES / "h2.xyz"), "--t-max", "2", "--t-max-factor", "4",
                 "--workers", "1", "--out", str(tmp_path / "x.json")]) == EXIT_FATAL


def test_missing_input_is_fatal(tmp_path):
    assert main(["inspect", str(tmp_path / "nope.mol"), "--workers", "1"]) == EXIT_FATAL


def test_estimate_is_deterministic(tmp_path):
    args = ["estimate", str(FIXTURES / "methane.mol"), "--workers", "1", "--points", "40"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.json")]) == EXIT_OK
    first = (tmp_path / "a.json").read_bytes()
    assert first == (tmp_path / "b.json").read_bytes()
    molecule = json.loads(first)["molecules"][0]
    assert molecule["single_shot_max"]["degree"] == 464
    assert molecule["physical"]["feasible"]


def test_estimate_from_manifest_and_csv(tmp_path):
    manifest = RunManifest(inputs=[str(FIXTURES / "h2.xyz"), str(FIXTURES / "hc_pair.ham")],
                           budget={"n_points": 10}, physical=False)
    path = tmp_path / "run.json"
    path.write_text(manifest.to_json())
    out = tmp_path / "summary.csv"
    assert main(["estimate", "--manifest", str(path), "--workers", "1", "--format", "csv",
                 "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame["molecule"]) == ["h2.xyz", "hc_pair.ham"]
    assert frame["n_phys"].isna().all()


def test_spectrum_of_text_hamiltonian(tmp_path):
    assert main(["spectrum", str(FIXTURES / "hc_pair.ham"), "--out", str(tmp_path)]) == EXIT_OK
    peaks = pd.read_csv(tmp_path / "hc_pair_peaks.csv")
    assert ((peaks["frequency_hz"] - 140.0).abs() < 0.2).any()
    trace = pd.read_csv(tmp_path / "hc_pair_trace.csv")
    assert len(trace) == 400
    assert (tmp_path / "hc_pair_spectrum.csv").exists()


def test_spectrum_with_too_few_points_fails(tmp_path):
    code = main(["spectrum", str(FIXTURES / "hc_pair.ham"), "--points", "3", "--out", str(tmp_path)])
    assert code == EXIT_FATAL
    assert not (tmp_path / "hc_pair_peaks.csv").exists()


def test_phases_command(tmp_path):
    out = tmp_path / "phases.csv"
    assert main(["phases", "--tau", "5", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert len(frame) == 21
    assert main(["phases"]) == EXIT_FATAL


def test_physical_forced_layout(tmp_path):
    out = tmp_path / "physical.json"
    code = main(["physical", "--n-t", "1e6", "--n-logical", "124", "--d1", "9", "--d2", "15",
                 "--factories", "4", "--shots", "1000", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["n_phys"] == 274194
    assert report["forced"]
    assert [m["name"] for m in report["machines"]] == ["ge", "fh128", "minimal"]


def test_physical_strict_infeasible():
    assert main(["physical", "--n-t", "1e22", "--n-logical", "100", "--strict"]) == EXIT_INFEASIBLE


def test_refmodel_writes_text_hamiltonian(tmp_path):
    out = tmp_path / "j1j2.ham"
    assert main(["refmodel", "--kind", "j1j2", "--lx", "2", "--ly", "2", "--out", str(out)]) == EXIT_OK
    h = hamiltonian_from_text(out.read_text())
    assert h.n_spins == 4 and h.n_terms == 18


def test_refmodel_estimate(tmp_path):
    out = tmp_path / "fh.json"
    code = main(["refmodel", "--kind", "fh", "--lx", "2", "--ly", "2", "--estimate",
                 "--points", "10", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["n_qubits"] == 8
    assert report["n_terms"] == 28
    assert report["offset"] == pytest.approx(-4.0)
    assert report["physical"]["feasible"]
