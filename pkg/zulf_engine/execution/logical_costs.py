import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from config import settings
from zulf_engine.core.cluster_scanner import ClusterReport
from zulf_engine.core.gqsp_planner import plan_degree
from zulf_engine.core.sample_schedule import SampleSchedule, SimulationBudget, schedule_for_fmax
from zulf_engine.core.spin_hamiltonian import SpinHamiltonian
from zulf_engine.data import tables
from zulf_engine.errors import ConfigurationError, DomainError
from zulf_engine.log import get_logger

log = get_logger("LCOST")

BREAKDOWN_KEYS = ("select", "prepare", "prepare_inverse", "reflection", "rotations",
                  "spin_oracles", "state_prep")


def selection_bits(n_terms: int) -> int:
    return int(math.ceil(math.log2(n_terms))) if n_terms > 1 else 0


class CostModel:
    """T-count formulas pinned by the cost-model ledger."""

    def __init__(self, ledger: Optional[Dict[str, Any]] = None):
        ledger = ledger if ledger is not None else tables.cost_ledger()
        try:
            self.version = str(ledger["ledger_version"])
            self.select_per_term = ledger["select"]["t_per_term"]
            prep = ledger["prepare"]
            self.prep_per_term = prep["t_per_term"]
            self.prep_per_coeff_bit = prep["t_per_coeff_bit"]
            self.prep_per_selection_bit = prep["t_per_selection_bit"]
            self.prep_offset = prep["offset"]
            self.refl_per_control = ledger["reflection"]["t_per_control"]
            rot = ledger["rotation"]
            self.rot_a, self.rot_b, self.rot_axial = rot["a"], rot["b"], rot["axial_per_su2"]
            oracle = ledger["spin_operator_oracle"]
            self.oracle_per_control = oracle["t_per_control"]
            self.oracle_count = oracle["oracles"]
            self.oracle_uncompute = oracle["uncompute_factor"]
            sp = ledger["state_prep"]
            self.state_prep_per_bit = sp["t_per_coeff_bit"]
            self.state_prep_uncompute = sp["uncompute_factor"]
        except KeyError as exc:
            raise ConfigurationError(f"cost ledger lacks {exc}", key=str(exc)) from exc

    def select(self, n_terms: int) -> int:
        return self.select_per_term * (n_terms - 1)

    def prepare(self, n_terms: int, mu: int) -> int:
        m = selection_bits(n_terms)
        return (self.prep_per_term * n_terms + self.prep_per_coeff_bit * mu
                + self.prep_per_selection_bit * m + self.prep_offset)

    def reflection(self, m: int) -> int:
        return max(self.refl_per_control * (m - 1), 0)

    def rotation(self, eps_rot: float) -> int:
        """One SU(2) rotation as ZYZ axial rotations, each ceil(a log2(1/eps) + b) T gates."""
        return self.rot_axial * int(math.ceil(self.rot_a * math.log2(1.0 / eps_rot) + self.rot_b))

    def spin_oracles(self, n_spins: int) -> int:
        s = selection_bits(n_spins)
        return (self.oracle_count * self.oracle_uncompute * n_spins
                * self.oracle_per_control * max(s - 1, 0))

    def state_prep(self, mu: int) -> int:
        return self.state_prep_uncompute * self.state_prep_per_bit * mu


_DEFAULT_MODEL: Optional[CostModel] = None


def default_model() -> CostModel:
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        _DEFAULT_MODEL = CostModel()
    return _DEFAULT_MODEL


@dataclass(frozen=True)
class EncodingCost:
    n_terms: int
    selection_bits: int
    coeff_bits: int
    select: int
    prepare: int
    prepare_inverse: int
    reflection: int
    ancilla: int

    @property
    def query(self) -> int:
        return self.select + self.prepare + self.prepare_inverse


def encoding_cost(h: SpinHamiltonian, mu: int = settings.DEFAULT_COEFF_BITS,
                  model: Optional[CostModel] = None) -> EncodingCost:
    """Per-query Select / Prepare / Prepare^-1 / reflection T-counts and the ancilla tally."""
    model = model or default_model()
    n_terms = h.n_terms
    if n_terms == 0:
        raise DomainError("block encoding needs at least one term")
    m = selection_bits(n_terms)
    prep = model.prepare(n_terms, mu)
    # selection + keep + alt + alias index + comparator flag
    ancilla = m + 2 * mu + m + 1
    return EncodingCost(n_terms, m, mu, model.select(n_terms), prep, prep,
                        model.reflection(m), ancilla)


@dataclass(frozen=True)
class EstimatorOverhead:
    readout_qubits: int
    sum_qubits: int
    spin_oracles: int
    state_prep: int

    @property
    def registers(self) -> int:
        return self.readout_qubits + self.sum_qubits

    @property
    def t_count(self) -> int:
        return self.spin_oracles + self.state_prep


def estimator_overhead(h: SpinHamiltonian, mu: int = settings.DEFAULT_COEFF_BITS,
                       model: Optional[CostModel] = None) -> EstimatorOverhead:
    """Correlation-function circuit: controlled S^z_tot oracles, PUp state prep, 1 + s registers."""
    model = model or default_model()
    n = h.n_spins
    if n < 1:
        raise DomainError("estimator needs at least one spin")
    return EstimatorOverhead(1, selection_bits(n), model.spin_oracles(n), model.state_prep(mu))


@dataclass(frozen=True)
class LogicalEstimate:
    t: float
    epsilon: float
    tau: float
    degree: int
    n_T: int
    n_rot: int
    n_logical: int
    n_logical_with_estimator: int
    breakdown: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_T != sum(self.breakdown.values()):
            raise DomainError(f"breakdown {self.breakdown} does not sum to n_T={self.n_T}")

    def with_overhead(self, overhead: EstimatorOverhead) -> "LogicalEstimate":
        breakdown = dict(self.breakdown)
        breakdown["spin_oracles"] += overhead.spin_oracles
        breakdown["state_prep"] += overhead.state_prep
        return LogicalEstimate(self.t, self.epsilon, self.tau, self.degree,
                               self.n_T + overhead.t_count, self.n_rot, self.n_logical,
                               self.n_logical + overhead.registers, breakdown)

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "epsilon": self.epsilon, "tau": self.tau, "degree": self.degree,
                "n_T": self.n_T, "n_rot": self.n_rot, "n_logical": self.n_logical,
                "n_logical_with_estimator": self.n_logical_with_estimator,
                "breakdown": dict(self.breakdown)}

    def __repr__(self):
        return f"LogicalEstimate(t={self.t:.4g}s, d={self.degree}, N_T={self.n_T:.3e}, N_L={self.n_logical})"


def evolution_cost(h: SpinHamiltonian, t: float, budget: SimulationBudget,
                   model: Optional[CostModel] = None) -> LogicalEstimate:
    """GQSP sequence: 2d block encodings and reflections, 2d + 1 SU(2) rotations."""
    model = model or default_model()
    enc = encoding_cost(h, budget.coeff_bits, model)
    eps = budget.epsilon_at(t, h.n_spins)
    plan = plan_degree(h.alpha, t, eps, with_coefficients=False)
    d = plan.degree
    n_rot = 2 * d + 1
    eps_rot = eps / (3 * n_rot)
    breakdown = {key: 0 for key in BREAKDOWN_KEYS}
    breakdown["select"] = 2 * d * enc.select
    breakdown["prepare"] = 2 * d * enc.prepare
    breakdown["prepare_inverse"] = 2 * d * enc.prepare_inverse
    breakdown["reflection"] = 2 * d * enc.reflection
    breakdown["rotations"] = n_rot * model.rotation(eps_rot)
    n_logical = h.n_spins + enc.ancilla + 1
    return LogicalEstimate(float(t), eps, plan.tau, d, sum(breakdown.values()), n_rot,
                           n_logical, n_logical, breakdown)


def point_estimate(h: SpinHamiltonian, t: float, budget: SimulationBudget,
                   model: Optional[CostModel] = None) -> LogicalEstimate:
    """Single-shot estimate at t including the estimator circuit."""
    model = model or default_model()
    return evolution_cost(h, t, budget, model).with_overhead(
        estimator_overhead(h, budget.coeff_bits, model))


@dataclass(frozen=True)
class ClusterAggregate:
    index: int
    n_spins: int
    n_terms: int
    alpha: float
    n_T_total: int
    n_phases_total: int
    single_shot_max: LogicalEstimate

    def to_dict(self) -> Dict[str, Any]:
        return {"index": self.index, "n_spins": self.n_spins, "n_terms": self.n_terms,
                "alpha_hz": self.alpha, "n_T_total": self.n_T_total,
                "n_phases_total": self.n_phases_total,
                "single_shot_max": self.single_shot_max.to_dict()}


@dataclass(frozen=True, eq=False)
class AggregateEstimate:
    threshold: int
    empty: bool
    schedule: Optional[SampleSchedule]
    clusters: List[ClusterAggregate]
    ledger_version: str

    @property
    def n_T_aggregate(self) -> int:
        return sum(c.n_T_total for c in self.clusters)

    @property
    def single_shot_max(self) -> Optional[LogicalEstimate]:
        if not self.clusters:
            return None
        return max((c.single_shot_max for c in self.clusters), key=lambda e: (e.n_T, e.n_logical))

    @property
    def n_logical(self) -> int:
        """Largest cluster sets the machine's logical register."""
        return max((c.single_shot_max.n_logical for c in self.clusters), default=0)

    @property
    def n_logical_with_estimator(self) -> int:
        return max((c.single_shot_max.n_logical_with_estimator for c in self.clusters), default=0)

    @property
    def n_shots(self) -> int:
        return self.schedule.n_shots if self.schedule else 0

    @property
    def circuit_executions(self) -> int:
        return self.n_shots * (self.schedule.n_points if self.schedule else 0)

    @property
    def classical_ensemble_shots(self) -> int:
        largest = max((c.n_spins for c in self.clusters), default=0)
        return largest ** 2 * self.n_shots

    @property
    def total_phases(self) -> int:
        return sum(c.n_phases_total for c in self.clusters)

    @property
    def ratio(self) -> Optional[float]:
        peak = self.single_shot_max
        return self.n_T_aggregate / peak.n_T if peak else None

    def flags(self) -> Dict[str, bool]:
        peak = self.single_shot_max
        n_t = peak.n_T if peak else 0
        return {
            "empty": self.empty,
            "below_small_molecule_band": n_t < settings.SMALL_MOLECULE_T_BAND,
            "exceeds_factoring_t_count": n_t > settings.FACTORING_T_COUNT,
            "exceeds_factoring_qubits": self.n_logical > settings.FACTORING_LOGICAL_QUBITS,
        }

    def to_dict(self) -> Dict[str, Any]:
        peak = self.single_shot_max
        return {
            "threshold": self.threshold,
            "empty": self.empty,
            "schedule": self.schedule.to_dict() if self.schedule else None,
            "clusters": [c.to_dict() for c in self.clusters],
            "single_shot_max": peak.to_dict() if peak else None,
            "n_T_aggregate": self.n_T_aggregate,
            "aggregate_ratio": self.ratio,
            "n_logical": self.n_logical,
            "n_logical_with_estimator": self.n_logical_with_estimator,
            "n_shots": self.n_shots,
            "circuit_executions": self.circuit_executions,
            "classical_ensemble_shots": self.classical_ensemble_shots,
            "total_phases": self.total_phases,
            "flags": self.flags(),
            "ledger_version": self.ledger_version,
        }


def aggregate(clusters: ClusterReport, budget: SimulationBudget,
              threshold: int = settings.DEFAULT_THRESHOLD,
              model: Optional[CostModel] = None) -> AggregateEstimate:
    """Sum single-shot N_T over clusters with N >= threshold and over one shared schedule."""
    if threshold < 1:
        raise DomainError(f"threshold must be >= 1, got {threshold}")
    model = model or default_model()
    eligible = [(k, c) for k, c in enumerate(clusters.clusters) if c.n_spins >= threshold]
    if not eligible:
        log.info(f"no cluster reaches N >= {threshold}; aggregate is empty")
        return AggregateEstimate(threshold, True, None, [], model.version)
    f_max = max(c.hamiltonian.f_max for _, c in eligible)
    sched = schedule_for_fmax(f_max, budget)
    rows = []
    for k, cluster in eligible:
        h = cluster.hamiltonian
        points = [point_estimate(h, float(t), budget, model) for t in sched.timepoints]
        peak = max(points, key=lambda e: (e.n_T, e.t))
        rows.append(ClusterAggregate(k, h.n_spins, h.n_terms, h.alpha,
                                     sum(p.n_T for p in points),
                                     sum(2 * p.degree + 1 for p in points), peak))
    result = AggregateEstimate(threshold, False, sched, rows, model.version)
    log.info(f"aggregate over {len(rows)} clusters x {sched.n_points} points: "
             f"N_T={result.n_T_aggregate:.3e} (x{result.ratio:.1f} single shot)")
    return result
