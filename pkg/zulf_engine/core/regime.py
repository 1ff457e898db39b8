from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional

from config import settings
from zulf_engine.data import tables
from zulf_engine.data.structure_stream import MolecularGraph
from zulf_engine.errors import ConfigurationError, DomainError
from zulf_engine.log import get_logger

log = get_logger("REGIME")

EXCHANGEABLE_PARTNERS = ("O", "N", "S")


class NucleusSet(Enum):
    PROTON = "proton"
    HETERO = "hetero"

    @property
    def species(self) -> FrozenSet[str]:
        if self is NucleusSet.PROTON:
            return frozenset({"1H"})
        return frozenset({"1H", "13C", "15N"})


class DipolarMode(Enum):
    NONE = "none"
    RDC = "rdc"
    FULL = "full"


@dataclass(frozen=True)
class RegimeConfig:
    nucleus_set: NucleusSet = NucleusSet(settings.DEFAULT_REGIME)
    dipolar_mode: DipolarMode = DipolarMode(settings.DEFAULT_DIPOLAR)
    kappa: float = settings.DEFAULT_KAPPA
    r_cut: float = settings.DEFAULT_R_CUT
    max_bond_separation: int = settings.DEFAULT_MAX_BOND_SEPARATION

    def __post_init__(self):
        object.__setattr__(self, "nucleus_set", NucleusSet(self.nucleus_set))
        object.__setattr__(self, "dipolar_mode", DipolarMode(self.dipolar_mode))
        if not 0.0 < self.kappa <= 1.0:
            raise DomainError(f"kappa must lie in (0, 1], got {self.kappa}")
        if self.r_cut <= 0:
            raise DomainError(f"r_cut must be positive, got {self.r_cut}")
        if self.max_bond_separation < 1:
            raise DomainError(f"max_bond_separation must be >= 1, got {self.max_bond_separation}")

    @property
    def dipolar_scale(self) -> float:
        """Multiplier on b_kl: 0 without dipolar terms, kappa for RDCs, 1 for full couplings."""
        if self.dipolar_mode is DipolarMode.NONE:
            return 0.0
        if self.dipolar_mode is DipolarMode.FULL:
            return 1.0
        return self.kappa

    def label(self) -> str:
        return f"{self.nucleus_set.value}+{self.dipolar_mode.value}"


@dataclass(frozen=True)
class SpinSite:
    atom_index: int
    species: str
    gamma: float  # rad s^-1 T^-1

    def __repr__(self):
        return f"SpinSite({self.species}#{self.atom_index})"


class SpeciesTable:
    """Element -> active spin-1/2 isotope lookup built from the gyromagnetic table."""

    def __init__(self, ratios: Optional[Dict[str, Dict]] = None):
        ratios = ratios if ratios is not None else tables.gyromagnetic_ratios()
        self.by_species: Dict[str, Dict] = {}
        self.by_element: Dict[str, str] = {}
        for species, entry in ratios.items():
            try:
                gamma = float(entry["gamma"])
                element = entry["element"]
            except KeyError as exc:
                raise ConfigurationError(f"gyromagnetic entry {species!r} lacks {exc}", key=species)
            if gamma == 0.0:
                raise ConfigurationError(f"gyromagnetic ratio of {species} is zero", key=species)
            self.by_species[species] = {"element": element, "gamma": gamma,
                                        "mass_number": entry.get("mass_number")}
            self.by_element[element] = species

    def gamma(self, species: str) -> float:
        if species not in self.by_species:
            raise ConfigurationError(f"no gyromagnetic ratio for {species}", key=species)
        return self.by_species[species]["gamma"]

    def species_for(self, element: str) -> Optional[str]:
        return self.by_element.get(element)


def _is_exchangeable(graph: MolecularGraph, index: int) -> bool:
    return any(graph.atoms[n].element in EXCHANGEABLE_PARTNERS for n in graph.neighbours(index))


def select_spin_sites(graph: MolecularGraph, regime: RegimeConfig,
                      species_table: Optional[SpeciesTable] = None,
                      exclude_exchangeable: bool = False) -> List[SpinSite]:
    """Atoms carrying an active isotope of the regime's nucleus set, in atom-index order."""
    species_table = species_table or SpeciesTable()
    wanted = regime.nucleus_set.species
    sites: List[SpinSite] = []
    dropped = 0
    for index, atom in enumerate(graph.atoms):
        species = species_table.species_for(atom.element)
        if species is None or species not in wanted:
            continue
        mass = species_table.by_species[species]["mass_number"]
        if atom.isotope is not None and mass is not None and atom.isotope != mass:
            continue  # explicitly labelled with an inactive isotope
        if exclude_exchangeable and species == "1H" and _is_exchangeable(graph, index):
            dropped += 1
            continue
        sites.append(SpinSite(index, species, species_table.gamma(species)))
    log.debug(f"{graph.title or 'molecule'}: {len(sites)} spin sites ({regime.label()}), "
              f"{dropped} exchangeable protons dropped")
    return sites
