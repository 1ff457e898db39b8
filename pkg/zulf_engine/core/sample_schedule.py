import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from config import settings
from zulf_engine.core.spin_hamiltonian import SpinHamiltonian
from zulf_engine.errors import DomainError
from zulf_engine.log import get_logger

log = get_logger("SCHEDULE")


class ErrorModel(Enum):
    CAPPED_T2 = "capped-t2"   # eps(t) = min(1 - exp(-t/T2), eps_max)
    N_SCALED = "n-scaled"     # eps(t) = min(1 - exp(-N t/T2), eps_max)


def shot_count(epsilon_meas: float) -> int:
    """ceil(1/eps_meas^2); rounding first keeps 1/0.01^2 at exactly 10^4."""
    if not 0.0 < epsilon_meas < 1.0:
        raise DomainError(f"epsilon_meas must lie in (0, 1), got {epsilon_meas}")
    return int(math.ceil(round(1.0 / epsilon_meas ** 2, 6)))


@dataclass(frozen=True)
class SimulationBudget:
    t_max: float = settings.DEFAULT_T_MAX
    t2: float = settings.DEFAULT_T2
    epsilon_max: float = settings.DEFAULT_EPS_MAX
    epsilon_meas: float = settings.DEFAULT_EPS_MEAS
    n_points: int = settings.DEFAULT_N_POINTS
    coeff_bits: int = settings.DEFAULT_COEFF_BITS
    error_model: ErrorModel = ErrorModel.CAPPED_T2

    def __post_init__(self):
        object.__setattr__(self, "error_model", ErrorModel(self.error_model))
        if self.t_max <= 0 or self.t2 <= 0:
            raise DomainError(f"t_max and T2 must be positive (got {self.t_max}, {self.t2})")
        if not 0.0 < self.epsilon_max < 1.0:
            raise DomainError(f"epsilon_max must lie in (0, 1), got {self.epsilon_max}")
        if not 0.0 < self.epsilon_meas < 1.0:
            raise DomainError(f"epsilon_meas must lie in (0, 1), got {self.epsilon_meas}")
        if self.n_points < 1:
            raise DomainError(f"n_points must be >= 1, got {self.n_points}")
        if self.coeff_bits < 1:
            raise DomainError(f"coeff_bits must be >= 1, got {self.coeff_bits}")

    @classmethod
    def acquisition(cls, t2: float = settings.DEFAULT_T2, t_max_factor: float = 3.0,
                    **kwargs) -> "SimulationBudget":
        """Experimental acquisition window: t_max between 3 T2 and 5 T2."""
        return cls(t2=t2, **kwargs).with_overrides(t_max_factor=t_max_factor)

    @property
    def gamma2(self) -> float:
        return 1.0 / self.t2

    @property
    def n_shots(self) -> int:
        return shot_count(self.epsilon_meas)

    @property
    def t_cap(self) -> float:
        """Earliest time at which the capped-t2 error sits at epsilon_max."""
        return -self.t2 * math.log1p(-self.epsilon_max)

    def epsilon_at(self, t: float, n_spins: int = 1) -> float:
        """Target unitary error at time t; t = 0 falls back to epsilon_max."""
        if t < 0:
            raise DomainError(f"t must be non-negative, got {t}")
        if t == 0:
            return self.epsilon_max
        rate = t / self.t2
        if self.error_model is ErrorModel.N_SCALED:
            rate *= max(1, n_spins)
        return min(-math.expm1(-rate), self.epsilon_max)

    def with_overrides(self, **changes) -> "SimulationBudget":
        """None values are skipped; t_max_factor sets t_max to a multiple of the (new) T2."""
        changes = {k: v for k, v in changes.items() if v is not None}
        factor = changes.pop("t_max_factor", None)
        if factor is not None:
            if not 3.0 <= factor <= 5.0:
                raise DomainError(f"t_max_factor must lie in [3, 5], got {factor}")
            if "t_max" in changes:
                raise DomainError("t_max and t_max_factor are mutually exclusive")
            changes["t_max"] = factor * changes.get("t2", self.t2)
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SampleSchedule:
    timepoints: np.ndarray
    f_max: float
    n_shots: int

    @property
    def n_points(self) -> int:
        return len(self.timepoints)

    def to_dict(self) -> dict:
        return {"f_max_hz": self.f_max, "n_points": self.n_points, "n_shots": self.n_shots,
                "t_first": float(self.timepoints[0]), "t_last": float(self.timepoints[-1])}

    def __repr__(self):
        return (f"SampleSchedule({self.n_points} pts in [{self.timepoints[0]:.4g}, "
                f"{self.timepoints[-1]:.4g}] s, f_max={self.f_max:.4g} Hz, shots={self.n_shots})")


def schedule_for_fmax(f_max: float, budget: SimulationBudget) -> SampleSchedule:
    if f_max <= 0:
        raise DomainError("f_max is zero: the Hamiltonian has no terms")
    t_first = min(1.0 / (2.0 * f_max), budget.t_max)
    if budget.n_points == 1:
        times = np.array([budget.t_max])
    else:
        times = np.geomspace(t_first, budget.t_max, budget.n_points)
        times[-1] = budget.t_max
    return SampleSchedule(times, float(f_max), budget.n_shots)


def schedule(h: SpinHamiltonian, budget: SimulationBudget,
             f_max: Optional[float] = None) -> SampleSchedule:
    """Log-spaced timepoints over [1/(2 f_max), t_max] with f_max = max |c_i|."""
    f_max = h.f_max if f_max is None else f_max
    sched = schedule_for_fmax(f_max, budget)
    log.debug(f"{sched!r}")
    return sched
