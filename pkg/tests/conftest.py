from pathlib import Path

import numpy as np
import pytest

from zulf_engine.core.regime import RegimeConfig, SpinSite, select_spin_sites
from zulf_engine.core.spin_hamiltonian import PauliTerm, SpinHamiltonian, build_hamiltonian
from zulf_engine.data.structure_stream import read_structure

FIXTURES = Path(__file__).parent / "fixtures"
GAMMA_H = 2.6752e8
GAMMA_C = 6.7283e7


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def molecule_hamiltonian(name: str, regime: str = "proton", dipolar: str = "none") -> SpinHamiltonian:
    graph = read_structure(FIXTURES / name)
    config = RegimeConfig(regime, dipolar)
    return build_hamiltonian(graph, select_spin_sites(graph, config), config)


@pytest.fixture
def methane_proton() -> SpinHamiltonian:
    return molecule_hamiltonian("methane.mol")


@pytest.fixture
def methane_hetero() -> SpinHamiltonian:
    return molecule_hamiltonian("methane.mol", "hetero")


@pytest.fixture
def hc_pair() -> SpinHamiltonian:
    """1H-13C with J = 140 Hz."""
    terms = tuple(PauliTerm(((0, a), (1, a)), 35.0) for a in "XYZ")
    sites = (SpinSite(1, "1H", GAMMA_H), SpinSite(0, "13C", GAMMA_C))
    return SpinHamiltonian(2, terms, sites)


def random_hamiltonian(rng: np.random.Generator, n_spins: int, n_terms: int,
                       max_factors: int = 2) -> SpinHamiltonian:
    """Distinct random Pauli strings with coefficients in +-[0.1, 2]."""
    seen = {}
    while len(seen) < n_terms:
        k = int(rng.integers(1, min(max_factors, n_spins) + 1))
        sites = sorted(rng.choice(n_spins, size=k, replace=False).tolist())
        factors = tuple((s, "XYZ"[int(rng.integers(3))]) for s in sites)
        if factors in seen:
            continue
        seen[factors] = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0))
    return SpinHamiltonian(n_spins, tuple(PauliTerm(f, c) for f, c in seen.items()))


@pytest.fixture
def random_h():
    return random_hamiltonian
