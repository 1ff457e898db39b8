import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from zulf_engine.core.sample_schedule import SimulationBudget
from zulf_engine.core.spin_hamiltonian import PauliTerm, SpinHamiltonian, scalar_terms
from zulf_engine.errors import DomainError
from zulf_engine.log import get_logger

log = get_logger("REFMODEL")

# Lattice vectors of the triangular embedding; sites sit at x*A1 + y*A2.
A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, math.sqrt(3.0) / 2.0])
NN_STEPS = ((1, 0), (0, 1), (-1, 1))
NNN_STEPS = ((1, 1), (-1, 2), (2, -1))


class LatticeKind(Enum):
    J1J2 = "j1j2"
    FERMI_HUBBARD = "fh"


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary lattice. couplings: (J1, J2) in Hz or (J, U) in units of J."""
    kind: LatticeKind
    lx: int
    ly: int
    couplings: Optional[Tuple[float, float]] = None
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "kind", LatticeKind(self.kind))
        if self.lx < 1 or self.ly < 1:
            raise DomainError(f"lattice extents must be >= 1, got {self.lx}x{self.ly}")
        if self.boundary != "open":
            raise DomainError(f"only open boundaries are supported, got {self.boundary!r}")
        if self.couplings is None:
            default = (1.0, 0.5) if self.kind is LatticeKind.J1J2 else (1.0, -4.0)
            object.__setattr__(self, "couplings", default)

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    @property
    def n_qubits(self) -> int:
        return self.n_sites if self.kind is LatticeKind.J1J2 else 2 * self.n_sites


def _site(lx: int, x: int, y: int) -> int:
    return y * lx + x


def _stepped_edges(lx: int, ly: int, steps) -> List[Tuple[int, int]]:
    edges = set()
    for y in range(ly):
        for x in range(lx):
            for dx, dy in steps:
                nx_, ny_ = x + dx, y + dy
                if 0 <= nx_ < lx and 0 <= ny_ < ly:
                    a, b = _site(lx, x, y), _site(lx, nx_, ny_)
                    edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def triangular_edges(lx: int, ly: int, tol: float = 1e-9) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    """Nearest (distance 1) and next-nearest (distance sqrt 3) pairs by brute-force geometry."""
    coords = np.array([x * A1 + y * A2 for y in range(ly) for x in range(lx)])
    nn, nnn = [], []
    for a in range(len(coords)):
        for b in range(a + 1, len(coords)):
            r = float(np.linalg.norm(coords[a] - coords[b]))
            if abs(r - 1.0) < tol:
                nn.append((a, b))
            elif abs(r - math.sqrt(3.0)) < tol:
                nnn.append((a, b))
    return nn, nnn


def build_j1j2(spec: LatticeSpec) -> SpinHamiltonian:
    """J1 sum_<ij> I_i.I_j + J2 sum_<<ij>> I_i.I_j: three Pauli terms of J/4 per edge."""
    if spec.kind is not LatticeKind.J1J2:
        raise DomainError(f"build_j1j2 needs a j1j2 lattice, got {spec.kind.value}")
    j1, j2 = spec.couplings
    nn = _stepped_edges(spec.lx, spec.ly, NN_STEPS)
    nnn = _stepped_edges(spec.lx, spec.ly, NNN_STEPS)
    terms: List[PauliTerm] = []
    for edges, j in ((nn, j1), (nnn, j2)):
        if j == 0.0:
            continue
        for a, b in edges:
            terms.extend(scalar_terms(a, b, j))
    h = SpinHamiltonian(spec.n_qubits, tuple(terms), metadata={
        "model": "j1j2-triangular", "lattice": f"{spec.lx}x{spec.ly}", "boundary": spec.boundary,
        "nn_edges": str(len(nn)), "nnn_edges": str(len(nnn))})
    log.info(f"J1-J2 {spec.lx}x{spec.ly}: {len(nn)} NN + {len(nnn)} NNN edges, M={h.n_terms}")
    return h


def fh_index(nx_: int, j: int, k: int) -> int:
    """0-based register index of the 1-based (row j, column k) orbital, (j,k) = 2Nx(j-1)+k."""
    return 2 * nx_ * (j - 1) + k - 1


def _hopping(a: int, b: int, coefficient: float) -> List[PauliTerm]:
    lo, hi = min(a, b), max(a, b)
    string = tuple((s, "Z") for s in range(lo + 1, hi))
    return [PauliTerm(((lo, axis),) + string + ((hi, axis),), coefficient) for axis in ("X", "Y")]


def build_fermi_hubbard(spec: LatticeSpec) -> SpinHamiltonian:
    """Jordan-Wigner square-lattice Hubbard model on 2 Nx Ny qubits.

    Odd columns hold spin-up, even columns spin-down orbitals of the same site.  The
    identity part of the on-site term is kept as `offset`.
    """
    if spec.kind is not LatticeKind.FERMI_HUBBARD:
        raise DomainError(f"build_fermi_hubbard needs an fh lattice, got {spec.kind.value}")
    hop, u = spec.couplings
    nx_, ny_ = spec.lx, spec.ly
    terms: List[PauliTerm] = []
    for j in range(1, ny_ + 1):
        for k in range(1, nx_):
            terms += _hopping(fh_index(nx_, j, 2 * k - 1), fh_index(nx_, j, 2 * k + 1), hop / 2.0)
            terms += _hopping(fh_index(nx_, j, 2 * k), fh_index(nx_, j, 2 * k + 2), hop / 2.0)
    vertical = hop * (-1) ** nx_ / 2.0
    for j in range(1, ny_):
        for k in range(1, 2 * nx_ + 1):
            terms += _hopping(fh_index(nx_, j, k), fh_index(nx_, j + 1, k), vertical)
    if u != 0.0:
        for j in range(1, ny_ + 1):
            for k in range(1, nx_ + 1):
                up, down = fh_index(nx_, j, 2 * k - 1), fh_index(nx_, j, 2 * k)
                terms += [PauliTerm(((up, "Z"),), u / 4.0), PauliTerm(((down, "Z"),), u / 4.0),
                          PauliTerm(((up, "Z"), (down, "Z")), u / 4.0)]
    offset = u * nx_ * ny_ / 4.0
    h = SpinHamiltonian(spec.n_qubits, tuple(terms), offset=offset, metadata={
        "model": "fermi-hubbard-square", "lattice": f"{nx_}x{ny_}", "boundary": spec.boundary,
        "U_over_J": repr(u / hop) if hop else "inf"})
    log.info(f"Fermi-Hubbard {nx_}x{ny_}: {h.n_spins} qubits, M={h.n_terms}, offset={offset:g}")
    return h


def build_reference(spec: LatticeSpec) -> SpinHamiltonian:
    if spec.kind is LatticeKind.J1J2:
        return build_j1j2(spec)
    return build_fermi_hubbard(spec)


def jordan_wigner_annihilator(j: int, n_modes: int) -> np.ndarray:
    """Dense c_j = (-Z)^{x j} x sigma^- x I^{x (n-j-1)}, 0-based j; occupied is |0>."""
    if not 0 <= j < n_modes:
        raise DomainError(f"mode {j} outside 0..{n_modes - 1}")
    minus_z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
    lower = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    out = np.array([[1.0 + 0j]])
    for m in range(n_modes):
        out = np.kron(out, minus_z if m < j else lower if m == j else np.eye(2))
    return out


@dataclass(frozen=True)
class ReferencePreset:
    name: str
    budget: SimulationBudget
    lattice_defaults: Dict[str, float] = field(default_factory=dict)

    @property
    def coeff_bits(self) -> int:
        return self.budget.coeff_bits


def reference_budgets(n_points: int = 400) -> Dict[str, ReferencePreset]:
    """Budgets for the lattice references: fixed phase error 1e-3 and 10-bit coefficients.

    T2 is set to t_max so the capped error sits at 1e-3 over the whole schedule.
    """
    coeff_bits = int(math.ceil(math.log2(1000)))
    j1j2 = SimulationBudget(t_max=1.0, t2=1.0, epsilon_max=1e-3, n_points=n_points, coeff_bits=coeff_bits)
    fh_tmax = 2 * math.pi * 200.0
    fh = SimulationBudget(t_max=fh_tmax, t2=fh_tmax, epsilon_max=1e-3, n_points=n_points,
                          coeff_bits=coeff_bits)
    return {
        LatticeKind.J1J2.value: ReferencePreset("j1j2", j1j2, {"J1": 1.0, "J2": 0.5}),
        LatticeKind.FERMI_HUBBARD.value: ReferencePreset("fh", fh, {"J": 1.0, "U": -4.0}),
    }
