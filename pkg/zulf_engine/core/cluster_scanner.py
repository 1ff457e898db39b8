import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import networkx as nx
import pandas as pd

from config import settings
from zulf_engine.core.spin_hamiltonian import SpinHamiltonian
from zulf_engine.log import get_logger

log = get_logger("SCANNER")

HARDNESS_LABELS = ("dense_propagator", "exact_simulation", "tensor_network")


@dataclass(frozen=True)
class RegisterMetrics:
    mean_distance: float
    max_distance: int
    n_couplings: int  # two-site Pauli terms
    degree: float     # n_couplings / n_spins

    def __repr__(self):
        return (f"RegisterMetrics(mean d={self.mean_distance:.3f}, max d={self.max_distance}, "
                f"N_c={self.n_couplings}, degree={self.degree:.3f})")


def register_metrics(cluster: SpinHamiltonian) -> RegisterMetrics:
    """Distances |i - j| in the 1-D register over distinct coupled pairs."""
    pairs = cluster.coupled_pairs()
    n_couplings = sum(1 for t in cluster.terms if len(t.factors) == 2)
    if pairs:
        distances = [j - i for i, j in pairs]
        mean_d = sum(distances) / len(distances)
        max_d = max(distances)
    else:
        mean_d, max_d = 0.0, 0
    degree = n_couplings / cluster.n_spins if cluster.n_spins else 0.0
    return RegisterMetrics(float(mean_d), int(max_d), n_couplings, float(degree))


def hardness_flags(n_spins: int) -> Dict[str, bool]:
    return {label: n_spins >= threshold
            for label, threshold in zip(HARDNESS_LABELS, settings.HARDNESS_THRESHOLDS)}


def dense_memory_log10_bytes(n_spins: int) -> float:
    """log10 of a dense complex128 propagator, 16 * 4**N bytes."""
    return math.log10(16.0) + n_spins * math.log10(4.0)


@dataclass(frozen=True)
class Cluster:
    sites: Tuple[int, ...]          # indices in the parent register
    hamiltonian: SpinHamiltonian    # induced and re-indexed
    metrics: RegisterMetrics

    @property
    def n_spins(self) -> int:
        return len(self.sites)

    @property
    def flags(self) -> Dict[str, bool]:
        return hardness_flags(self.n_spins)

    def __repr__(self):
        return f"Cluster(N={self.n_spins}, M={self.hamiltonian.n_terms}, sites={list(self.sites)})"


@dataclass(frozen=True)
class ClusterReport:
    clusters: Tuple[Cluster, ...]
    n_spins: int

    @property
    def largest(self):
        return self.clusters[0] if self.clusters else None

    def sizes(self) -> List[int]:
        return [c.n_spins for c in self.clusters]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for idx, c in enumerate(self.clusters):
            row = {
                "cluster": idx,
                "n_spins": c.n_spins,
                "n_terms": c.hamiltonian.n_terms,
                "n_couplings": c.metrics.n_couplings,
                "degree": c.metrics.degree,
                "mean_distance": c.metrics.mean_distance,
                "max_distance": c.metrics.max_distance,
                "alpha_hz": c.hamiltonian.alpha,
                "dense_memory_log10_bytes": dense_memory_log10_bytes(c.n_spins),
            }
            row.update(c.flags)
            row["sites"] = " ".join(str(s) for s in c.sites)
            rows.append(row)
        return pd.DataFrame(rows, columns=None if rows else
                            ["cluster", "n_spins", "n_terms", "n_couplings", "degree",
                             "mean_distance", "max_distance", "alpha_hz",
                             "dense_memory_log10_bytes", *HARDNESS_LABELS, "sites"])


def decompose_clusters(h: SpinHamiltonian) -> ClusterReport:
    """Connected components of the term-support graph, largest first then lowest index."""
    graph = nx.Graph()
    graph.add_nodes_from(h.active_sites())
    for term in h.terms:
        nx.add_path(graph, term.sites)
    components = sorted((sorted(c) for c in nx.connected_components(graph)),
                        key=lambda c: (-len(c), c[0]))
    clusters = []
    for members in components:
        sub = h.induced(members)
        clusters.append(Cluster(tuple(members), sub, register_metrics(sub)))
    report = ClusterReport(tuple(clusters), h.n_spins)
    log.info(f"{len(clusters)} clusters, sizes {report.sizes()[:8]}"
             f"{' ...' if len(clusters) > 8 else ''}")
    return report
