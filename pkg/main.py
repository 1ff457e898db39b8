import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from batch_runner import (BatchRunner, RunManifest, frame_to_csv, load_hamiltonian, report_to_json,
                          summary_frame, write_atomic, write_report)
from config import settings
from zulf_engine import log as zlog
from zulf_engine.core.cluster_scanner import decompose_clusters
from zulf_engine.core.gqsp_planner import generate_phases, plan_degree, plan_from_tau
from zulf_engine.core.reference_models import (LatticeKind, LatticeSpec, build_reference,
                                               reference_budgets)
from zulf_engine.core.sample_schedule import schedule
from zulf_engine.core.spin_hamiltonian import hamiltonian_to_text
from zulf_engine.errors import InfeasibleLayoutError, ZulfError
from zulf_engine.execution.error_budget import (HardwareModel, force_layout, machine_profile,
                                                optimize)
from zulf_engine.execution.logical_costs import aggregate, point_estimate
from zulf_engine.oracle import dense_oracle

log = zlog.get_logger("CLI")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2
EXIT_INFEASIBLE = 3


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--regime", choices=["proton", "hetero"], default=settings.DEFAULT_REGIME)
    common.add_argument("--dipolar", choices=["none", "rdc", "full"], default=settings.DEFAULT_DIPOLAR)
    common.add_argument("--kappa", type=float, default=settings.DEFAULT_KAPPA, help="RDC scale")
    common.add_argument("--r-cut", type=float, default=settings.DEFAULT_R_CUT, help="dipolar cutoff, Angstrom")
    common.add_argument("--max-bonds", type=int, default=settings.DEFAULT_MAX_BOND_SEPARATION,
                        help="largest bond separation with a scalar coupling")
    common.add_argument("--input-format", choices=["mol", "sdf", "xyz"], default=None,
                        help="structure format; overrides the file suffix")
    common.add_argument("--t2", type=float, default=None, help="T2 in seconds")
    common.add_argument("--t-max", type=float, default=None, help="simulation time in seconds")
    common.add_argument("--t-max-factor", type=float, default=None, help="t_max as a multiple of T2 (3 to 5)")
    common.add_argument("--error-model", choices=["capped-t2", "n-scaled"], default=None)
    common.add_argument("--eps-max", type=float, default=None)
    common.add_argument("--points", type=int, default=None, help="number of timepoints")
    common.add_argument("--threshold", type=int, default=settings.DEFAULT_THRESHOLD)
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--couplings", default=None, help="coupling table override (JSON)")
    common.add_argument("--exclude-exchangeable", action="store_true")
    common.add_argument("--strict", action="store_true")
    common.add_argument("--verbose", action="store_true")
    return common


def _hardware_parser() -> argparse.ArgumentParser:
    hw = argparse.ArgumentParser(add_help=False)
    hw.add_argument("--machine", action="append", default=None,
                    help="ge, fh128, minimal or custom:<qubits>; repeatable")
    hw.add_argument("--p-phys", type=float, default=None)
    hw.add_argument("--t-cycle", type=float, default=None)
    hw.add_argument("--t-react", type=float, default=None)
    hw.add_argument("--target-error", type=float, default=settings.DEFAULT_TARGET_ERROR)
    return hw


def build_parser() -> argparse.ArgumentParser:
    common, hw = _common_parser(), _hardware_parser()
    parser = argparse.ArgumentParser(prog="zulf", description="ZULF NMR simulation resource estimator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="cluster report per molecule")
    p.add_argument("paths", nargs="*")
    p.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)

    p = sub.add_parser("estimate", parents=[common, hw], help="logical and physical estimates")
    p.add_argument("paths", nargs="*")
    p.add_argument("--manifest", default=None, help="run manifest JSON (replaces flags)")
    p.add_argument("--no-physical", action="store_true")
    p.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)

    p = sub.add_parser("spectrum", parents=[common], help="exact correlation trace and spectrum")
    p.add_argument("path")
    p.add_argument("--observable", choices=["sz", "mz", "sx"], default="mz")
    p.add_argument("--rho0", choices=["uniform", "thermal-z", "basis"], default="uniform")
    p.add_argument("--log-times", action="store_true", help="use the log-spaced schedule")

    p = sub.add_parser("phases", parents=[common], help="GQSP phase sequence")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None, help="Hz, with --time")
    p.add_argument("--time", type=float, default=None, help="seconds, with --alpha")
    p.add_argument("--eps", type=float, default=1e-3)

    p = sub.add_parser("physical", parents=[common, hw], help="surface-code layout for (N_T, N_L)")
    p.add_argument("--n-t", type=float, required=True)
    p.add_argument("--n-logical", type=int, required=True)
    p.add_argument("--d1", type=int, default=None)
    p.add_argument("--d2", type=int, default=None)
    p.add_argument("--factories", type=int, default=None)
    p.add_argument("--shots", type=int, default=None, help="total circuit executions")

    p = sub.add_parser("refmodel", parents=[common, hw], help="lattice reference Hamiltonians")
    p.add_argument("--kind", choices=[k.value for k in LatticeKind], required=True)
    p.add_argument("--lx", type=int, required=True)
    p.add_argument("--ly", type=int, required=True)
    p.add_argument("--couplings-pair", type=float, nargs=2, default=None,
                   metavar=("A", "B"), help="(J1, J2) or (J, U)")
    p.add_argument("--estimate", action="store_true")
    p.set_defaults(d1=None, d2=None, factories=None)
    return parser


def _budget_overrides(args) -> dict:
    raw = {"t2": args.t2, "t_max": args.t_max, "t_max_factor": args.t_max_factor,
           "epsilon_max": args.eps_max, "n_points": args.points, "error_model": args.error_model}
    return {k: v for k, v in raw.items() if v is not None}


def _hardware_overrides(args) -> dict:
    raw = {"p_phys": args.p_phys, "t_cycle": args.t_cycle, "t_react": args.t_react}
    return {k: v for k, v in raw.items() if v is not None}


def manifest_from_args(args) -> RunManifest:
    if getattr(args, "manifest", None):
        return RunManifest.from_json(Path(args.manifest).read_text())
    manifest = RunManifest(inputs=list(args.paths), nucleus_set=args.regime, dipolar=args.dipolar,
                           kappa=args.kappa, r_cut=args.r_cut, max_bond_separation=args.max_bonds,
                           input_format=args.input_format,
                           exclude_exchangeable=args.exclude_exchangeable, threshold=args.threshold,
                           budget=_budget_overrides(args), coupling_table=args.couplings,
                           out_dir=args.out, fmt=args.format)
    if hasattr(args, "target_error"):
        manifest.hardware = _hardware_overrides(args)
        manifest.target_error = args.target_error
        if args.machine:
            manifest.machines = list(args.machine)
        manifest.physical = not getattr(args, "no_physical", False)
    return manifest


def _emit(text: str, out: Optional[str], default_name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    if target.suffix.lower() not in (".json", ".csv", ".txt", ".ham"):
        target = target / default_name
    write_atomic(target, text)
    log.info(f"wrote {target}")


def cmd_batch(args) -> int:
    manifest = manifest_from_args(args)
    report = BatchRunner(manifest, args.workers).run(args.command)
    if args.out:
        path = write_report(report, args.out, args.format)
        log.info(f"wrote {path}")
    elif args.format == "csv":
        sys.stdout.write(frame_to_csv(summary_frame(report)))
    else:
        sys.stdout.write(report_to_json(report))
    if args.strict and args.command == "estimate":
        infeasible = [m["molecule"] for m in report["molecules"]
                      if m["physical"] is not None and not m["physical"]["feasible"]]
        if infeasible:
            log.error(f"strict: no feasible layout for {', '.join(infeasible)}")
            return EXIT_INFEASIBLE
    return EXIT_PARTIAL if report["failures"] else EXIT_OK


def cmd_spectrum(args) -> int:
    args.paths = [args.path]
    manifest = manifest_from_args(args)
    budget = manifest.simulation_budget()
    h = load_hamiltonian(args.path, manifest)
    clusters = decompose_clusters(h)
    if clusters.largest is None:
        log.error(f"{args.path}: no coupled spins")
        return EXIT_FATAL
    cluster = clusters.largest.hamiltonian
    if cluster.n_spins > settings.ORACLE_SPIN_CAP:
        log.error(f"largest cluster has {cluster.n_spins} spins; the dense oracle is capped at "
                  f"{settings.ORACLE_SPIN_CAP}")
        return EXIT_FATAL
    if args.log_times:
        times = schedule(cluster, budget).timepoints
    else:
        times = np.linspace(0.0, budget.t_max, budget.n_points)
    trace = dense_oracle.correlator(cluster, args.rho0, args.observable, times)
    if trace.is_flat():
        log.warning(f"{args.observable} trace is constant: the observable is conserved")
    try:
        spec = dense_oracle.spectrum(trace, budget.gamma2)
    except ZulfError as exc:
        log.error(f"spectrum of {Path(args.path).name} ({len(times)} points): {exc}")
        return EXIT_FATAL
    peaks = spec.peaks()
    out = Path(args.out) if args.out else Path(".")
    stem = Path(args.path).stem
    write_atomic(out / f"{stem}_trace.csv", frame_to_csv(trace.to_frame()))
    write_atomic(out / f"{stem}_spectrum.csv", frame_to_csv(spec.to_frame()))
    write_atomic(out / f"{stem}_peaks.csv", frame_to_csv(peaks))
    log.info(f"{stem}: {len(peaks)} peaks, bin {spec.bin_width:.4g} Hz; files in {out}")
    return EXIT_OK


def cmd_phases(args) -> int:
    if args.tau is not None:
        plan = plan_from_tau(args.tau, args.eps)
    elif args.alpha is not None and args.time is not None:
        plan = plan_degree(args.alpha, args.time, args.eps)
    else:
        log.error("phases needs --tau or both --alpha and --time")
        return EXIT_FATAL
    phases = generate_phases(plan)
    plan = plan.with_phases(phases)
    log.info(f"{plan!r}: {phases.n_phases} phases, reconstruction error "
             f"{phases.reconstruction_error():.2e}, scale {phases.scale:.12f}")
    _emit(frame_to_csv(plan.phases_to_frame()), args.out, "phases.csv")
    return EXIT_OK


def _physical_report(logical, args, shots: Optional[int]) -> dict:
    hw = HardwareModel(**_hardware_overrides(args))
    if args.d1 is not None and args.d2 is not None:
        phys = force_layout(logical, args.d1, args.d2, args.factories, hw, args.target_error)
    else:
        phys = optimize(logical, hw, args.target_error, strict=args.strict)
    machines = []
    for name in args.machine or ["ge", "fh128", "minimal"]:
        profile = machine_profile(name, phys)
        row = dict(profile.to_dict(), concurrency=phys.concurrency(profile))
        if shots:
            row["runtime_s"] = phys.runtime(profile, shots)
        machines.append(row)
    return dict(phys.to_dict(), machines=machines, schema_version=settings.REPORT_SCHEMA_VERSION)


def cmd_physical(args) -> int:
    report = _physical_report((int(args.n_t), args.n_logical), args, args.shots)
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out, "physical.json")
    return EXIT_OK if report["feasible"] or not args.strict else EXIT_INFEASIBLE


def cmd_refmodel(args) -> int:
    spec = LatticeSpec(args.kind, args.lx, args.ly,
                       tuple(args.couplings_pair) if args.couplings_pair else None)
    h = build_reference(spec)
    if not args.estimate:
        _emit(hamiltonian_to_text(h), args.out, f"{args.kind}_{args.lx}x{args.ly}.ham")
        return EXIT_OK
    preset = reference_budgets()[spec.kind.value]
    budget = preset.budget.with_overrides(**_budget_overrides(args))
    single = point_estimate(h, budget.t_max, budget)
    agg = aggregate(decompose_clusters(h), budget, threshold=1)
    report = {"schema_version": settings.REPORT_SCHEMA_VERSION, "model": dict(h.metadata),
              "n_qubits": h.n_spins, "n_terms": h.n_terms, "alpha": h.alpha, "offset": h.offset,
              "single_shot": single.to_dict(), "aggregate": agg.to_dict(),
              "physical": _physical_report(single, args, agg.circuit_executions)}
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out, "refmodel.json")
    return EXIT_OK


COMMANDS = {
    "inspect": cmd_batch,
    "estimate": cmd_batch,
    "spectrum": cmd_spectrum,
    "phases": cmd_phases,
    "physical": cmd_physical,
    "refmodel": cmd_refmodel,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    zlog.configure(verbose=args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ZulfError as exc:
        log.error(f"{args.command}: {exc}")
        return EXIT_INFEASIBLE if isinstance(exc, InfeasibleLayoutError) else EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
