import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from config import settings
from zulf_engine.errors import DomainError, InfeasibleLayoutError
from zulf_engine.execution.logical_costs import LogicalEstimate
from zulf_engine.log import get_logger

log = get_logger("WARDEN")


@dataclass(frozen=True)
class HardwareModel:
    """Rotated surface code with lattice surgery and AutoCCZ factories.

    Tile counts n_x give areas A_x = 2 n_x d_x^2; depths are in code cycles.
    """
    p_phys: float = settings.DEFAULT_P_PHYS
    p_thresh: float = settings.DEFAULT_P_THRESH
    t_cycle: float = settings.DEFAULT_T_CYCLE
    t_react: float = settings.DEFAULT_T_REACT
    eta: int = settings.DEFAULT_ETA
    t1_tiles: int = 4 * 8          # 4 d1 x 8 d1
    ccz_tiles: int = 6 * 3         # 6 d2 x 3 d2
    cat_tiles: int = 4 * 4         # 4 d2 x 4 d2
    store_tiles: int = 2           # level-1 routing and storage, at d2
    t1_depth: float = 5.75         # x d1
    ccz_depth: float = 5.0         # x d2
    cat_depth: float = 1.0         # x d2
    v_inj: float = 100.0
    v_t1: float = 1100.0
    v_ccz_cat: float = 1000.0

    def __post_init__(self):
        if not 0.0 < self.p_phys < self.p_thresh:
            raise DomainError(f"need 0 < p_phys < p_thresh, got {self.p_phys} vs {self.p_thresh}")
        if self.eta not in (4, 8):
            raise DomainError(f"eta must be 4 or 8, got {self.eta}")
        if self.t_cycle <= 0 or self.t_react <= 0:
            raise DomainError("t_cycle and t_react must be positive")

    @property
    def v_ccz(self) -> float:
        return self.v_ccz_cat * self.ccz_depth / (self.ccz_depth + self.cat_depth)

    @property
    def v_cat(self) -> float:
        return self.v_ccz_cat * self.cat_depth / (self.ccz_depth + self.cat_depth)


def cell_error(d: int, hw: HardwareModel) -> float:
    """Topological error per spacetime cell, 0.1 (p/p_th)^((d+1)/2)."""
    if d < 1:
        raise DomainError(f"code distance must be >= 1, got {d}")
    if hw.p_phys >= hw.p_thresh:
        raise DomainError("p_phys must be below threshold")
    return 0.1 * (hw.p_phys / hw.p_thresh) ** ((d + 1) / 2.0)


@dataclass(frozen=True)
class DistillErrors:
    injection: float
    t1: float
    ccz: float
    t2: float


def distill_error(d1: int, d2: int, hw: HardwareModel) -> DistillErrors:
    """Injection at d0 = d1 // 2, 15-to-1 at d1, CCZ and catalysed 2T at d2."""
    if d1 >= d2:
        raise DomainError(f"need d1 < d2, got ({d1}, {d2})")
    d0 = max(d1 // 2, 1)
    eps_inj = hw.v_inj * cell_error(d0, hw) + hw.p_phys
    eps_t1 = hw.v_t1 * cell_error(d1, hw) + 35.0 * eps_inj ** 3
    eps_ccz = hw.v_ccz * cell_error(d2, hw) + 28.0 * eps_t1 ** 2
    eps_t2 = hw.v_cat * cell_error(d2, hw) + eps_ccz
    return DistillErrors(eps_inj, eps_t1, eps_ccz, eps_t2)


@dataclass(frozen=True)
class FactoryLayout:
    a_t1: int
    a_ccz: int
    a_cat: int
    a_store: int
    a_fact: int
    d_t1: float
    d_ccz: float
    d_cat: float
    d_distill: float
    n_t1: int


def factory_layout(d1: int, d2: int, hw: HardwareModel) -> FactoryLayout:
    a_t1 = 2 * hw.t1_tiles * d1 ** 2
    a_ccz = 2 * hw.ccz_tiles * d2 ** 2
    a_cat = 2 * hw.cat_tiles * d2 ** 2
    a_store = 2 * hw.store_tiles * d2 ** 2
    a_fact = hw.eta * a_t1 + a_ccz + a_cat + a_store
    d_t1 = hw.t1_depth * d1
    d_ccz = hw.ccz_depth * d2
    d_cat = hw.cat_depth * d2
    d_distill = max(d_t1, d_ccz + d_cat)
    n_t1 = int(math.ceil(hw.eta * d_t1 / d_ccz))
    return FactoryLayout(a_t1, a_ccz, a_cat, a_store, a_fact, d_t1, d_ccz, d_cat, d_distill, n_t1)


def data_tiles(n_logical: int) -> int:
    """Fast block layout, 2 N_L + sqrt(8 N_L) + 1 tiles."""
    return int(math.ceil(2 * n_logical + math.sqrt(8 * n_logical) + 1))


@dataclass(frozen=True)
class MachineProfile:
    name: str
    physical_qubits: Optional[int]   # None: sized to the job
    logical_qubits: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "physical_qubits": self.physical_qubits,
                "logical_qubits": self.logical_qubits}


FACTORING_2048 = MachineProfile("ge", 20_000_000, 6190)
FH_128 = MachineProfile("fh128", 48_100_000, 32805)


@dataclass(frozen=True)
class PhysicalEstimate:
    d1: int
    d2: int
    n_factories: int
    n_data_tiles: int
    n_phys: int
    t_wall: float
    n_T: int
    n_logical: int
    epsilon_target: float
    distill: DistillErrors
    layout: FactoryLayout
    eps_data: float
    eps_distill: float
    feasible: bool = True
    forced: bool = False

    @property
    def d0(self) -> int:
        return self.d1 // 2

    @property
    def eps_phys(self) -> float:
        return self.eps_data + self.eps_distill

    def concurrency(self, machine: MachineProfile) -> int:
        if machine.physical_qubits is None:
            return 1
        return machine.physical_qubits // self.n_phys

    def runtime(self, machine: MachineProfile, total_shots: int) -> Optional[float]:
        """ceil(shots / concurrency) * T_wall; None if the job does not fit."""
        slots = self.concurrency(machine)
        if slots < 1:
            return None
        return math.ceil(total_shots / slots) * self.t_wall

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d0": self.d0, "d1": self.d1, "d2": self.d2,
            "n_factories": self.n_factories, "n_data_tiles": self.n_data_tiles,
            "n_phys": self.n_phys, "t_wall_s": self.t_wall, "n_T": self.n_T,
            "n_logical": self.n_logical, "feasible": self.feasible, "forced": self.forced,
            "epsilon_target": self.epsilon_target,
            "factory": {"a_fact": self.layout.a_fact, "a_t1": self.layout.a_t1,
                        "a_ccz": self.layout.a_ccz, "a_cat": self.layout.a_cat,
                        "a_store": self.layout.a_store, "d_distill": self.layout.d_distill,
                        "n_t1": self.layout.n_t1},
            "errors": {"injection": self.distill.injection, "t1": self.distill.t1,
                       "ccz": self.distill.ccz, "t2": self.distill.t2,
                       "data": self.eps_data, "distill": self.eps_distill,
                       "total": self.eps_phys},
        }

    def __repr__(self):
        return (f"PhysicalEstimate((d2,d1)=({self.d2},{self.d1}), factories={self.n_factories}, "
                f"N_phys={self.n_phys:.3e}, eps={self.eps_phys:.2e}, feasible={self.feasible})")


def _evaluate(n_t: int, n_logical: int, d1: int, d2: int, hw: HardwareModel,
              epsilon_target: float, n_factories: Optional[int] = None,
              forced: bool = False) -> PhysicalEstimate:
    distill = distill_error(d1, d2, hw)
    layout = factory_layout(d1, d2, hw)
    n_data = data_tiles(n_logical)
    d_meas = n_t
    t_wall = d_meas * hw.t_react
    if n_factories is None:
        rate = n_t * layout.d_distill * hw.t_cycle / t_wall
        n_factories = max(1, int(math.ceil(round(rate, 9))))
    eps_data = d_meas * n_data * cell_error(d2, hw)
    eps_distill = n_t / 2.0 * distill.t2
    n_phys = n_factories * layout.a_fact + 2 * n_data * d2 ** 2
    return PhysicalEstimate(d1, d2, n_factories, n_data, n_phys, t_wall, n_t, n_logical,
                            epsilon_target, distill, layout, eps_data, eps_distill,
                            eps_data + eps_distill <= epsilon_target, forced)


def _counts(logical) -> Tuple[int, int]:
    if isinstance(logical, LogicalEstimate):
        n_t, n_l = logical.n_T, logical.n_logical
    else:
        n_t, n_l = logical
    if n_t < 1 or n_l < 1:
        raise DomainError(f"need N_T >= 1 and N_logical >= 1, got ({n_t}, {n_l})")
    return int(n_t), int(n_l)


def force_layout(logical, d1: int, d2: int, n_factories: Optional[int] = None,
                 hw: Optional[HardwareModel] = None,
                 epsilon_target: float = settings.DEFAULT_TARGET_ERROR) -> PhysicalEstimate:
    """Evaluate a given (d1, d2, factory count); `logical` is a LogicalEstimate or (N_T, N_L)."""
    hw = hw or HardwareModel()
    n_t, n_l = _counts(logical)
    if d1 % 2 == 0 or d2 % 2 == 0:
        raise DomainError(f"code distances must be odd, got ({d1}, {d2})")
    return _evaluate(n_t, n_l, d1, d2, hw, epsilon_target, n_factories, forced=True)


def candidate_distances(d1_range: Tuple[int, int] = settings.D1_RANGE,
                        d2_max: int = settings.D2_MAX) -> List[Tuple[int, int]]:
    lo, hi = d1_range
    lo += (lo + 1) % 2
    return [(d1, d2) for d1 in range(lo, hi + 1, 2) for d2 in range(d1 + 2, d2_max + 1, 2)]


def optimize(logical, hw: Optional[HardwareModel] = None,
             epsilon_target: float = settings.DEFAULT_TARGET_ERROR,
             strict: bool = False) -> PhysicalEstimate:
    """Minimal-N_phys odd (d1, d2) meeting eps_phys <= target; ties go to smaller d2, then d1.

    Without a feasible point the lowest-error candidate comes back with feasible=False,
    or InfeasibleLayoutError is raised when strict.
    """
    hw = hw or HardwareModel()
    n_t, n_l = _counts(logical)
    best: Optional[PhysicalEstimate] = None
    closest: Optional[PhysicalEstimate] = None
    for d1, d2 in candidate_distances():
        est = _evaluate(n_t, n_l, d1, d2, hw, epsilon_target)
        if closest is None or est.eps_phys < closest.eps_phys:
            closest = est
        if est.feasible and (best is None or (est.n_phys, est.d2, est.d1) < (best.n_phys, best.d2, best.d1)):
            best = est
            log.debug(f"candidate (d2,d1)=({d2},{d1}) N_phys={est.n_phys} eps={est.eps_phys:.2e}")
    if best is not None:
        log.info(f"N_T={n_t:.3e}, N_L={n_l}: {best!r}")
        return best
    log.warning(f"no feasible layout for N_T={n_t:.3e}; best eps_phys={closest.eps_phys:.3e}")
    if strict:
        raise InfeasibleLayoutError(
            f"no (d1, d2) in the search grid reaches eps_phys <= {epsilon_target}", closest.eps_phys)
    return closest


def reference_machines(estimate: Optional[PhysicalEstimate] = None) -> List[MachineProfile]:
    minimal = MachineProfile("minimal", estimate.n_phys if estimate else None)
    return [FACTORING_2048, FH_128, minimal]


def machine_profile(name: str, estimate: Optional[PhysicalEstimate] = None) -> MachineProfile:
    """`minimal`, `ge`, `fh128` or `custom:<qubits>`."""
    key = name.strip().lower()
    if key.startswith("custom:"):
        try:
            qubits = int(float(key.split(":", 1)[1]))
        except ValueError:
            raise DomainError(f"bad custom machine size in {name!r}")
        if qubits < 1:
            raise DomainError(f"custom machine needs a positive qubit count, got {qubits}")
        return MachineProfile(key, qubits)
    for profile in reference_machines(estimate):
        if profile.name == key:
            return profile
    raise DomainError(f"unknown machine profile {name!r}")
