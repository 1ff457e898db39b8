import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import constants

from zulf_engine.core.regime import RegimeConfig, SpinSite
from zulf_engine.data import tables
from zulf_engine.data.structure_stream import MolecularGraph, bond_distance_matrix
from zulf_engine.errors import ConfigurationError, DomainError
from zulf_engine.log import get_logger

log = get_logger("SPINHAM")

AXES = ("X", "Y", "Z")
SPECIES_ORDER = ("1H", "13C", "15N")
DIPOLAR_DROP = 1e-12
TEXT_MAGIC = "# zulf-hamiltonian v1"

Factor = Tuple[int, str]


@dataclass(frozen=True, order=True)
class PauliTerm:
    """coefficient * prod(sigma^axis_site), coefficient in Hz.

    Molecular Hamiltonians use at most two factors; Jordan-Wigner strings run longer.
    """
    factors: Tuple[Factor, ...]
    coefficient: float

    def __post_init__(self):
        factors = tuple(sorted((int(s), str(a).upper()) for s, a in self.factors))
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise DomainError(f"repeated site in {factors}")
        if any(s < 0 for s in sites) or any(a not in AXES for _, a in factors):
            raise DomainError(f"bad factor in {factors}")
        if self.coefficient == 0.0 or not math.isfinite(self.coefficient):
            raise DomainError(f"coefficient must be finite and nonzero, got {self.coefficient}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def sites(self) -> Tuple[int, ...]:
        return tuple(s for s, _ in self.factors)

    def label(self) -> str:
        return " ".join(f"{s}:{a}" for s, a in self.factors) or "I"

    def __repr__(self):
        return f"{self.coefficient:+.6g}*{self.label()}"


def _canonical_terms(terms: Iterable[PauliTerm], merge_tol: float = 0.0) -> Tuple[PauliTerm, ...]:
    merged: Dict[Tuple[Factor, ...], float] = {}
    for term in terms:
        merged[term.factors] = merged.get(term.factors, 0.0) + term.coefficient
    out = [PauliTerm(f, c) for f, c in merged.items() if abs(c) > merge_tol]
    return tuple(sorted(out, key=lambda t: t.factors))


@dataclass(frozen=True)
class SpinHamiltonian:
    """Pauli-string LCU over n_spins qubits.

    Terms are kept canonical: duplicate supports merged, sorted by factors.
    `offset` is an identity component tracked outside the LCU (it never enters alpha).
    `sites` optionally maps register index -> SpinSite for molecular Hamiltonians.
    """
    n_spins: int
    terms: Tuple[PauliTerm, ...]
    sites: Tuple[SpinSite, ...] = ()
    zeeman: Optional[Tuple[Tuple[float, float, float], ...]] = None
    offset: float = 0.0
    metadata: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        terms = _canonical_terms(self.terms)
        for term in terms:
            if any(s >= self.n_spins for s in term.sites):
                raise DomainError(f"term {term!r} outside register of {self.n_spins} spins")
        if self.sites and len(self.sites) != self.n_spins:
            raise DomainError(f"{len(self.sites)} site records for {self.n_spins} spins")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "sites", tuple(self.sites))

    @property
    def alpha(self) -> float:
        return float(sum(abs(t.coefficient) for t in self.terms))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def f_max(self) -> float:
        return max((abs(t.coefficient) for t in self.terms), default=0.0)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)

    def gammas(self) -> Optional[np.ndarray]:
        if not self.sites:
            return None
        return np.array([s.gamma for s in self.sites], dtype=float)

    def coupled_pairs(self) -> List[Tuple[int, int]]:
        return sorted({t.sites for t in self.terms if len(t.factors) == 2})

    def active_sites(self) -> List[int]:
        return sorted({s for t in self.terms for s in t.sites})

    def induced(self, keep: Sequence[int]) -> "SpinHamiltonian":
        """Sub-Hamiltonian on `keep`, re-indexed 0..len(keep)-1 in ascending original order."""
        keep = sorted(set(int(k) for k in keep))
        remap = {old: new for new, old in enumerate(keep)}
        terms = [PauliTerm(tuple((remap[s], a) for s, a in t.factors), t.coefficient)
                 for t in self.terms if t.factors and all(s in remap for s in t.sites)]
        sites = tuple(self.sites[k] for k in keep) if self.sites else ()
        zeeman = tuple(self.zeeman[k] for k in keep) if self.zeeman else None
        return SpinHamiltonian(len(keep), tuple(terms), sites, zeeman, 0.0, dict(self.metadata))

    def scaled(self, factor: float) -> "SpinHamiltonian":
        terms = tuple(PauliTerm(t.factors, t.coefficient * factor) for t in self.terms)
        return SpinHamiltonian(self.n_spins, terms, self.sites, self.zeeman,
                               self.offset * factor, dict(self.metadata))

    def with_field(self, zeeman: Sequence[Sequence[float]]) -> "SpinHamiltonian":
        """Fold per-site fields h_k (Hz) into one-site terms -h_k . sigma_k."""
        if len(zeeman) != self.n_spins:
            raise DomainError(f"need one field vector per spin ({self.n_spins}), got {len(zeeman)}")
        extra = []
        for k, h in enumerate(zeeman):
            for axis, value in zip(AXES, h):
                if value != 0.0:
                    extra.append(PauliTerm(((k, axis),), -float(value)))
        field_tuple = tuple(tuple(float(v) for v in h) for h in zeeman)
        return SpinHamiltonian(self.n_spins, self.terms + tuple(extra), self.sites, field_tuple,
                               self.offset, dict(self.metadata))

    def __repr__(self):
        return f"SpinHamiltonian(N={self.n_spins}, M={self.n_terms}, alpha={self.alpha:.6g} Hz)"


def species_key(a: str, b: str) -> str:
    rank = {s: i for i, s in enumerate(SPECIES_ORDER)}
    first, second = sorted((a, b), key=lambda s: (rank.get(s, len(rank)), s))
    return f"{first}-{second}"


class CouplingTable:
    """Representative J^k_AB values in Hz keyed by species pair and bond separation."""

    def __init__(self, entries: Dict[str, Dict[int, float]]):
        self.entries: Dict[str, Dict[int, float]] = {}
        for raw_key, by_k in entries.items():
            parts = raw_key.split("-")
            if len(parts) != 2:
                raise ConfigurationError(f"coupling key {raw_key!r} is not 'A-B'", key=raw_key)
            key = species_key(*parts)
            self.entries[key] = {}
            for k, value in by_k.items():
                k_int = int(k)
                if k_int < 1:
                    raise ConfigurationError(f"{key}: bond separation {k} < 1", key=key)
                value = float(value)
                if not math.isfinite(value):
                    raise ConfigurationError(f"{key}: non-finite J at k={k}", key=key)
                self.entries[key][k_int] = value

    @classmethod
    def load(cls, override: Optional[Union[str, Path]] = None) -> "CouplingTable":
        return cls(tables.load_table("coupling_table.json", override))

    def lookup(self, species_a: str, species_b: str, k: int) -> Optional[float]:
        key = species_key(species_a, species_b)
        if key not in self.entries:
            raise ConfigurationError(f"coupling table has no entry for {key}", key=key)
        return self.entries[key].get(int(k))


def dipolar_coupling_hz(gamma_a: float, gamma_b: float, r_angstrom: float) -> float:
    """b_kl / 2pi in Hz for two spins r_angstrom apart."""
    r = r_angstrom * 1e-10
    b = constants.mu_0 * gamma_a * gamma_b * constants.hbar / (4.0 * math.pi * r ** 3)
    return b / (2.0 * math.pi)


def dipolar_terms(k: int, l: int, gamma_k: float, gamma_l: float, r_vec: np.ndarray,
                  scale: float = 1.0) -> List[PauliTerm]:
    """Expand scale*b/4 [sigma_k.sigma_l - 3(sigma_k.r)(sigma_l.r)] into Pauli products."""
    dist = float(np.linalg.norm(r_vec))
    unit = r_vec / dist
    b = scale * dipolar_coupling_hz(gamma_k, gamma_l, dist)
    tensor = 0.25 * b * (np.eye(3) - 3.0 * np.outer(unit, unit))
    out = []
    for i, ax_i in enumerate(AXES):
        for j, ax_j in enumerate(AXES):
            value = float(tensor[i, j])
            if abs(value) >= DIPOLAR_DROP * abs(b):
                out.append(PauliTerm(((k, ax_i), (l, ax_j)), value))
    return out


def scalar_terms(k: int, l: int, j_hz: float) -> List[PauliTerm]:
    """J I_k . I_l = (J/4)(XX + YY + ZZ)."""
    return [PauliTerm(((k, a), (l, a)), j_hz / 4.0) for a in AXES]


def build_hamiltonian(graph: MolecularGraph, sites: Sequence[SpinSite], regime: RegimeConfig,
                      table: Optional[CouplingTable] = None,
                      zeeman: Optional[Sequence[Sequence[float]]] = None) -> SpinHamiltonian:
    """Scalar couplings within max_bond_separation bonds plus optional dipolar terms within r_cut."""
    table = table or CouplingTable.load()
    sites = list(sites)
    separations = bond_distance_matrix(graph)
    positions = graph.positions()
    scale = regime.dipolar_scale
    terms: List[PauliTerm] = []
    n_scalar = n_dipolar = 0
    for (k, site_k), (l, site_l) in combinations(enumerate(sites), 2):
        hops = separations[site_k.atom_index, site_l.atom_index]
        if np.isfinite(hops) and 1 <= hops <= regime.max_bond_separation:
            j_hz = table.lookup(site_k.species, site_l.species, int(hops))
            if j_hz:
                terms.extend(scalar_terms(k, l, j_hz))
                n_scalar += 1
        if scale > 0.0:
            r_vec = positions[site_l.atom_index] - positions[site_k.atom_index]
            dist = float(np.linalg.norm(r_vec))
            if 0.0 < dist <= regime.r_cut:
                terms.extend(dipolar_terms(k, l, site_k.gamma, site_l.gamma, r_vec, scale))
                n_dipolar += 1
    h = SpinHamiltonian(len(sites), tuple(terms), tuple(sites),
                        metadata={"molecule": graph.title, "regime": regime.label()})
    if zeeman is not None:
        h = h.with_field(zeeman)
    log.info(f"{graph.title or 'molecule'} [{regime.label()}]: N={h.n_spins} M={h.n_terms} "
             f"alpha={h.alpha:.4g} Hz ({n_scalar} scalar pairs, {n_dipolar} dipolar pairs)")
    return h


def hamiltonian_to_text(h: SpinHamiltonian) -> str:
    """Line format: header, optional site records, then `coeff site:axis [site:axis]` per term."""
    lines = [TEXT_MAGIC, f"n_spins {h.n_spins}", f"alpha {h.alpha!r}"]
    if h.offset:
        lines.append(f"offset {h.offset!r}")
    for k, site in enumerate(h.sites):
        lines.append(f"site {k} {site.species} {site.atom_index} {site.gamma!r}")
    for term in h.terms:
        lines.append(f"{term.coefficient!r} {term.label()}")
    return "\n".join(lines) + "\n"


def hamiltonian_from_text(text: str) -> SpinHamiltonian:
    n_spins: Optional[int] = None
    alpha: Optional[float] = None
    offset = 0.0
    sites: List[SpinSite] = []
    terms: List[PauliTerm] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "n_spins":
                n_spins = int(rest[0])
            elif head == "alpha":
                alpha = float(rest[0])
            elif head == "offset":
                offset = float(rest[0])
            elif head == "site":
                sites.append(SpinSite(int(rest[2]), rest[1], float(rest[3])))
            else:
                factors = []
                for token in rest:
                    s, a = token.split(":")
                    factors.append((int(s), a))
                terms.append(PauliTerm(tuple(factors), float(head)))
        except (ValueError, IndexError) as exc:
            raise DomainError(f"line {number}: cannot parse {raw!r} ({exc})")
    if n_spins is None:
        raise DomainError("missing n_spins header")
    h = SpinHamiltonian(n_spins, tuple(terms), tuple(sites), offset=offset)
    if alpha is not None and not math.isclose(alpha, h.alpha, rel_tol=1e-9, abs_tol=1e-12):
        raise DomainError(f"header alpha {alpha} disagrees with terms ({h.alpha})")
    return h
