import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd

from config import settings
from zulf_engine.core.cluster_scanner import ClusterReport, decompose_clusters
from zulf_engine.core.regime import RegimeConfig, select_spin_sites
from zulf_engine.core.sample_schedule import SimulationBudget
from zulf_engine.core.spin_hamiltonian import (CouplingTable, SpinHamiltonian, build_hamiltonian,
                                               hamiltonian_from_text)
from zulf_engine.data.structure_stream import STRUCTURE_SUFFIXES, StructureFormat, read_structure
from zulf_engine.errors import ConfigurationError, DomainError, ZulfError
from zulf_engine.execution.error_budget import HardwareModel, machine_profile, optimize
from zulf_engine.execution.logical_costs import aggregate, default_model, point_estimate
from zulf_engine.log import get_logger

log = get_logger("BATCH")

HAMILTONIAN_SUFFIX = ".ham"
BUDGET_KEYS = ("t_max", "t_max_factor", "t2", "epsilon_max", "epsilon_meas", "n_points", "coeff_bits", "error_model")
HARDWARE_KEYS = ("p_phys", "p_thresh", "t_cycle", "t_react", "eta")


@dataclass
class RunManifest:
    """Everything a batch estimate depends on; serializes to a stable JSON document."""
    inputs: List[str] = field(default_factory=list)
    nucleus_set: str = settings.DEFAULT_REGIME
    dipolar: str = settings.DEFAULT_DIPOLAR
    kappa: float = settings.DEFAULT_KAPPA
    r_cut: float = settings.DEFAULT_R_CUT
    max_bond_separation: int = settings.DEFAULT_MAX_BOND_SEPARATION
    input_format: Optional[str] = None  # overrides suffix sniffing for structure files
    exclude_exchangeable: bool = False
    threshold: int = settings.DEFAULT_THRESHOLD
    budget: Dict[str, Any] = field(default_factory=dict)
    hardware: Dict[str, Any] = field(default_factory=dict)
    target_error: float = settings.DEFAULT_TARGET_ERROR
    machines: List[str] = field(default_factory=lambda: ["ge", "fh128", "minimal"])
    physical: bool = True
    coupling_table: Optional[str] = None
    out_dir: Optional[str] = None
    fmt: str = "json"
    schema_version: str = settings.REPORT_SCHEMA_VERSION

    def validate(self) -> "RunManifest":
        for key in self.budget:
            if key not in BUDGET_KEYS:
                raise ConfigurationError(f"unknown budget override {key!r}", key)
        for key in self.hardware:
            if key not in HARDWARE_KEYS:
                raise ConfigurationError(f"unknown hardware override {key!r}", key)
        missing = [p for p in self.inputs if not Path(p).exists()]
        if missing:
            raise ConfigurationError(f"input not found: {', '.join(missing)}", "inputs")
        if self.coupling_table and not Path(self.coupling_table).exists():
            raise ConfigurationError(f"coupling table not found: {self.coupling_table}", "coupling_table")
        if self.fmt not in ("json", "csv"):
            raise ConfigurationError(f"unknown report format {self.fmt!r}", "fmt")
        if self.input_format is not None:
            StructureFormat.from_name(self.input_format)
        self.regime_config()
        self.simulation_budget()
        self.hardware_model()
        return self

    def regime_config(self) -> RegimeConfig:
        return RegimeConfig(self.nucleus_set, self.dipolar, self.kappa, self.r_cut,
                            self.max_bond_separation)

    def simulation_budget(self) -> SimulationBudget:
        return SimulationBudget().with_overrides(**self.budget)

    def hardware_model(self) -> HardwareModel:
        return HardwareModel(**self.hardware)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"manifest is not valid JSON: {exc}", "manifest")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown manifest keys {sorted(unknown)}", sorted(unknown)[0])
        return cls(**data)


def load_hamiltonian(path: Union[str, Path], manifest: RunManifest) -> SpinHamiltonian:
    """Structure file through the regime pipeline, or a `.ham` text Hamiltonian as is."""
    path = Path(path)
    if path.suffix.lower() == HAMILTONIAN_SUFFIX:
        return hamiltonian_from_text(path.read_text())
    graph = read_structure(path, manifest.input_format)
    regime = manifest.regime_config()
    sites = select_spin_sites(graph, regime, exclude_exchangeable=manifest.exclude_exchangeable)
    table = CouplingTable.load(manifest.coupling_table)
    return build_hamiltonian(graph, sites, regime, table)


def input_files(paths: List[str]) -> List[Path]:
    """Structure and `.ham` files under the given paths, sorted; explicit files are kept as given."""
    found = set()
    for p in map(Path, paths):
        if p.is_dir():
            found.update(f for f in p.iterdir() if f.is_file() and
                         f.suffix.lower() in STRUCTURE_SUFFIXES + (HAMILTONIAN_SUFFIX,))
        else:
            found.add(p)
    return sorted(found)


def cluster_rows(path: Path, report: ClusterReport) -> List[Dict[str, Any]]:
    frame = report.to_frame()
    frame.insert(0, "molecule", path.name)
    return json.loads(frame.to_json(orient="records", double_precision=15))


def inspect_one(path: Union[str, Path], manifest: RunManifest) -> Dict[str, Any]:
    path = Path(path)
    h = load_hamiltonian(path, manifest)
    report = decompose_clusters(h)
    return {"molecule": path.name, "n_spins": h.n_spins, "n_terms": h.n_terms,
            "alpha_hz": h.alpha, "cluster_sizes": report.sizes(),
            "clusters": cluster_rows(path, report)}


def estimate_one(path: Union[str, Path], manifest: RunManifest) -> Dict[str, Any]:
    """Clusters, per-cluster single shot at t_max, aggregate and optional physical mapping."""
    path = Path(path)
    budget = manifest.simulation_budget()
    model = default_model()
    h = load_hamiltonian(path, manifest)
    report = decompose_clusters(h)
    singles = []
    for index, cluster in enumerate(report.clusters):
        if cluster.hamiltonian.n_terms == 0:
            continue
        est = point_estimate(cluster.hamiltonian, budget.t_max, budget, model)
        singles.append({"index": index, "n_spins": cluster.n_spins,
                        "n_terms": cluster.hamiltonian.n_terms, "estimate": est})
    agg = aggregate(report, budget, manifest.threshold, model)
    peak = max((s["estimate"] for s in singles), key=lambda e: (e.n_T, e.n_logical), default=None)
    result: Dict[str, Any] = {
        "molecule": path.name,
        "n_spins": h.n_spins,
        "n_terms": h.n_terms,
        "alpha_hz": h.alpha,
        "cluster_sizes": report.sizes(),
        "single_shot": [dict(s, estimate=s["estimate"].to_dict()) for s in singles],
        "single_shot_max": peak.to_dict() if peak else None,
        "below_small_molecule_band": bool(peak and peak.n_T < settings.SMALL_MOLECULE_T_BAND),
        "aggregate": agg.to_dict(),
        "physical": None,
    }
    if manifest.physical and peak is not None:
        phys = optimize(peak, manifest.hardware_model(), manifest.target_error)
        total = agg.circuit_executions or budget.n_shots * budget.n_points
        machines = []
        for name in manifest.machines:
            profile = machine_profile(name, phys)
            machines.append(dict(profile.to_dict(), concurrency=phys.concurrency(profile),
                                 runtime_s=phys.runtime(profile, total)))
        result["physical"] = dict(phys.to_dict(), total_shots=total, machines=machines)
    return result


def _worker(job: Tuple[str, str, str]) -> Dict[str, Any]:
    command, path, manifest_json = job
    manifest = RunManifest.from_json(manifest_json)
    try:
        if command == "inspect":
            return {"ok": True, "report": inspect_one(path, manifest)}
        return {"ok": True, "report": estimate_one(path, manifest)}
    except (ZulfError, OSError) as exc:
        return {"ok": False, "molecule": Path(path).name, "error": f"{type(exc).__name__}: {exc}"}


class BatchRunner:
    """Runs one command over every input file with a bounded worker pool."""

    def __init__(self, manifest: RunManifest, workers: int = settings.DEFAULT_WORKERS):
        self.manifest = manifest.validate()
        self.workers = max(1, int(workers))
        self.files = input_files(manifest.inputs)

    def run(self, command: str) -> Dict[str, Any]:
        if command not in ("inspect", "estimate"):
            raise DomainError(f"unknown batch command {command!r}")
        manifest_json = self.manifest.to_json()
        jobs = [(command, str(p), manifest_json) for p in self.files]
        log.info(f"{command}: {len(jobs)} inputs, {self.workers} workers")
        if self.workers == 1 or len(jobs) <= 1:
            results = [_worker(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(_worker, jobs))
        molecules = sorted((r["report"] for r in results if r["ok"]), key=lambda r: r["molecule"])
        failures = sorted(({"molecule": r["molecule"], "error": r["error"]}
                           for r in results if not r["ok"]), key=lambda r: r["molecule"])
        for failure in failures:
            log.warning(f"{failure['molecule']}: {failure['error']}")
        manifest_doc = json.loads(manifest_json)
        manifest_doc.pop("out_dir", None)  # not part of the result
        return {"schema_version": self.manifest.schema_version, "command": command,
                "manifest": manifest_doc, "molecules": molecules, "failures": failures}


def summary_frame(report: Dict[str, Any]) -> pd.DataFrame:
    """One row per molecule; the CSV projection of a report."""
    if report["command"] == "inspect":
        rows = [row for mol in report["molecules"] for row in mol["clusters"]]
        return pd.DataFrame(rows)
    rows = []
    for mol in report["molecules"]:
        peak = mol["single_shot_max"] or {}
        agg = mol["aggregate"]
        phys = mol["physical"] or {}
        rows.append({
            "molecule": mol["molecule"], "n_spins": mol["n_spins"], "n_terms": mol["n_terms"],
            "largest_cluster": mol["cluster_sizes"][0] if mol["cluster_sizes"] else 0,
            "n_T_single": peak.get("n_T"), "n_logical": peak.get("n_logical_with_estimator"),
            "n_T_aggregate": agg["n_T_aggregate"], "aggregate_ratio": agg["aggregate_ratio"],
            "n_phys": phys.get("n_phys"), "d1": phys.get("d1"), "d2": phys.get("d2"),
            "n_factories": phys.get("n_factories"), "feasible": phys.get("feasible"),
        })
    return pd.DataFrame(rows)


def write_atomic(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def report_to_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")


def write_report(report: Dict[str, Any], out: Union[str, Path], fmt: str = "json") -> Path:
    """Writes `<out>` (a file or a directory) atomically; directories get `<command>.<fmt>`."""
    out = Path(out)
    if out.suffix.lower() not in (".json", ".csv"):
        out = out / f"{report['command']}.{fmt}"
    if fmt == "csv":
        return write_atomic(out, frame_to_csv(summary_frame(report)))
    return write_atomic(out, report_to_json(report))
