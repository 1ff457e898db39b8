import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config import settings
from zulf_engine.data import tables
from zulf_engine.errors import DomainError, StructureParseError
from zulf_engine.log import get_logger

log = get_logger("STRUCT")

Vector3 = Tuple[float, float, float]
Bond = Tuple[int, int, int]  # (i, j, order) with i < j


class StructureFormat(Enum):
    MOLV2000 = "mol"
    XYZ = "xyz"

    @classmethod
    def from_name(cls, name: Union[str, "StructureFormat"]) -> "StructureFormat":
        if isinstance(name, StructureFormat):
            return name
        key = str(name).strip().lower().lstrip(".")
        aliases = {"mol": cls.MOLV2000, "molv2000": cls.MOLV2000, "v2000": cls.MOLV2000,
                   "sdf": cls.MOLV2000, "xyz": cls.XYZ}
        if key not in aliases:
            raise DomainError(f"unknown structure format {name!r}")
        return aliases[key]


@dataclass(frozen=True)
class Atom:
    element: str
    position: Vector3
    isotope: Optional[int] = None

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.position):
            raise DomainError(f"non-finite position for {self.element}: {self.position}")

    def __repr__(self):
        iso = f"{self.isotope}" if self.isotope else ""
        x, y, z = self.position
        return f"Atom({iso}{self.element} @ {x:.4f},{y:.4f},{z:.4f})"


@dataclass(frozen=True)
class MolecularGraph:
    atoms: Tuple[Atom, ...]
    bonds: Tuple[Bond, ...] = ()
    title: str = ""

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        canonical = []
        for i, j, order in self.bonds:
            if i == j:
                raise DomainError(f"self-bond on atom {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise DomainError(f"bond ({i},{j}) out of range for {n} atoms")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise DomainError(f"duplicate bond {key}")
            seen.add(key)
            canonical.append((key[0], key[1], int(order)))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(sorted(canonical)))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_atoms))
        g.add_edges_from((i, j, {"order": order}) for i, j, order in self.bonds)
        return g

    def neighbours(self, index: int) -> List[int]:
        out = [j for i, j, _ in self.bonds if i == index]
        out += [i for i, j, _ in self.bonds if j == index]
        return sorted(out)

    def formula(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for atom in self.atoms:
            counts[atom.element] = counts.get(atom.element, 0) + 1
        return counts

    def __repr__(self):
        return f"MolecularGraph({self.title or '?'}: {self.n_atoms} atoms, {len(self.bonds)} bonds)"


def _normalize_symbol(raw: str) -> str:
    raw = raw.strip()
    return raw[:1].upper() + raw[1:].lower()


def infer_bonds(atoms: Sequence[Atom], radii: Dict[str, float],
                tolerance: float = settings.XYZ_BOND_TOLERANCE) -> List[Bond]:
    """Single bonds wherever d_ij <= tolerance * (r_i + r_j)."""
    if len(atoms) < 2:
        return []
    pos = np.array([a.position for a in atoms], dtype=float)
    r = np.array([radii[a.element] for a in atoms], dtype=float)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    limit = tolerance * (r[:, None] + r[None, :])
    ii, jj = np.nonzero(np.triu(dist <= limit, k=1))
    return [(int(i), int(j), 1) for i, j in zip(ii, jj)]


def _check_element(symbol: str, radii: Dict[str, float], line_number: int) -> str:
    element = _normalize_symbol(symbol)
    if element not in radii:
        raise StructureParseError(f"unknown element symbol {symbol!r}", line_number)
    return element


def _parse_xyz(lines: List[str], radii: Dict[str, float]) -> MolecularGraph:
    if not lines or not lines[0].strip():
        raise StructureParseError("missing atom count", 1)
    try:
        count = int(lines[0].split()[0])
    except ValueError:
        raise StructureParseError(f"atom count is not an integer: {lines[0].strip()!r}", 1)
    if count < 0:
        raise StructureParseError("negative atom count", 1)
    title = lines[1].strip() if len(lines) > 1 else ""
    body = lines[2:]
    records = [ln for ln in body if ln.strip()]
    if len(records) != count:
        raise StructureParseError(f"header declares {count} atoms, found {len(records)}", 1)
    atoms = []
    for offset, line in enumerate(body):
        if not line.strip():
            continue
        line_number = offset + 3
        parts = line.split()
        if len(parts) < 4:
            raise StructureParseError(f"expected 'element x y z', got {line.strip()!r}", line_number)
        element = _check_element(parts[0], radii, line_number)
        try:
            xyz = tuple(float(v) for v in parts[1:4])
        except ValueError:
            raise StructureParseError(f"bad coordinates {parts[1:4]}", line_number)
        if not all(math.isfinite(c) for c in xyz):
            raise StructureParseError("non-finite coordinate", line_number)
        atoms.append(Atom(element, xyz))
    bonds = infer_bonds(atoms, radii)
    return MolecularGraph(tuple(atoms), tuple(bonds), title)


def _parse_molv2000(lines: List[str], radii: Dict[str, float]) -> MolecularGraph:
    if len(lines) < 4:
        raise StructureParseError("truncated header (need 3 header lines and a counts line)", len(lines) + 1)
    counts = lines[3]
    if "V3000" in counts:
        raise StructureParseError("V3000 connection tables are not supported", 4)
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError:
        raise StructureParseError(f"malformed counts line {counts.rstrip()!r}", 4)
    if len(lines) < 4 + n_atoms + n_bonds:
        raise StructureParseError(
            f"counts line declares {n_atoms} atoms and {n_bonds} bonds but the file ends early",
            len(lines))

    atoms: List[Atom] = []
    for k in range(n_atoms):
        line_number = 5 + k
        parts = lines[4 + k].split()
        if len(parts) < 4:
            raise StructureParseError(f"malformed atom line {lines[4 + k].rstrip()!r}", line_number)
        try:
            xyz = tuple(float(v) for v in parts[0:3])
        except ValueError:
            raise StructureParseError(f"bad coordinates {parts[0:3]}", line_number)
        if not all(math.isfinite(c) for c in xyz):
            raise StructureParseError("non-finite coordinate", line_number)
        atoms.append(Atom(_check_element(parts[3], radii, line_number), xyz))

    bonds: List[Bond] = []
    seen = set()
    for k in range(n_bonds):
        line_number = 5 + n_atoms + k
        line = lines[4 + n_atoms + k]
        try:
            i, j, order = int(line[0:3]), int(line[3:6]), int(line[6:9])
        except ValueError:
            raise StructureParseError(f"malformed bond line {line.rstrip()!r}", line_number)
        if not (1 <= i <= n_atoms and 1 <= j <= n_atoms) or i == j:
            raise StructureParseError(f"bond references invalid atoms ({i},{j})", line_number)
        key = (min(i, j) - 1, max(i, j) - 1)
        if key in seen:
            raise StructureParseError(f"duplicate bond ({i},{j})", line_number)
        seen.add(key)
        bonds.append((key[0], key[1], order))

    # properties block: only isotopes matter here
    for k in range(4 + n_atoms + n_bonds, len(lines)):
        line = lines[k]
        if line.startswith("M  END"):
            break
        if line.startswith("M  ISO"):
            parts = line.split()
            try:
                entries = int(parts[2])
                pairs = [(int(parts[3 + 2 * e]), int(parts[4 + 2 * e])) for e in range(entries)]
            except (ValueError, IndexError):
                raise StructureParseError(f"malformed isotope record {line.rstrip()!r}", k + 1)
            for idx, mass in pairs:
                if not 1 <= idx <= n_atoms:
                    raise StructureParseError(f"isotope record for missing atom {idx}", k + 1)
                old = atoms[idx - 1]
                atoms[idx - 1] = Atom(old.element, old.position, mass)

    return MolecularGraph(tuple(atoms), tuple(bonds), lines[0].strip())


def parse_structure(content: Union[bytes, str], fmt: Union[str, StructureFormat],
                    radii: Optional[Dict[str, float]] = None) -> MolecularGraph:
    """Parse MOL V2000 or XYZ text into a MolecularGraph.

    XYZ inputs get bonds from the covalent-radius rule; MOL inputs keep the bond block verbatim.
    """
    fmt = StructureFormat.from_name(fmt)
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StructureParseError(f"input is not UTF-8 text ({exc})")
    radii = radii if radii is not None else tables.covalent_radii()
    lines = content.splitlines()
    if fmt is StructureFormat.XYZ:
        graph = _parse_xyz(lines, radii)
    else:
        graph = _parse_molv2000(lines, radii)
    log.debug(f"parsed {graph}")
    return graph


STRUCTURE_SUFFIXES = (".mol", ".sdf", ".xyz")


def sniff_format(path: Union[str, Path]) -> StructureFormat:
    return StructureFormat.from_name(Path(path).suffix or "?")


def read_structure(path: Union[str, Path], fmt: Optional[Union[str, StructureFormat]] = None,
                   radii: Optional[Dict[str, float]] = None) -> MolecularGraph:
    path = Path(path)
    fmt = StructureFormat.from_name(fmt) if fmt else sniff_format(path)
    graph = parse_structure(path.read_bytes(), fmt, radii)
    if not graph.title:
        graph = MolecularGraph(graph.atoms, graph.bonds, path.stem)
    return graph


def serialize_molv2000(graph: MolecularGraph) -> str:
    """Write the supported V2000 subset: coordinates, bond orders and isotopes."""
    out = [graph.title, "  zulf_engine", ""]
    out.append(f"{graph.n_atoms:3d}{len(graph.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
    for atom in graph.atoms:
        x, y, z = atom.position
        out.append(f"{x:10.4f}{y:10.4f}{z:10.4f} {atom.element:<3s} 0  0  0  0  0  0  0  0  0  0  0  0")
    for i, j, order in graph.bonds:
        out.append(f"{i + 1:3d}{j + 1:3d}{order:3d}  0")
    labelled = [(k + 1, a.isotope) for k, a in enumerate(graph.atoms) if a.isotope]
    for start in range(0, len(labelled), 8):
        chunk = labelled[start:start + 8]
        body = "".join(f" {idx:3d} {mass:3d}" for idx, mass in chunk)
        out.append(f"M  ISO{len(chunk):3d}{body}")
    out.append("M  END")
    return "\n".join(out) + "\n"


def bond_distance_matrix(graph: MolecularGraph) -> np.ndarray:
    """Shortest bond-path lengths; unreachable pairs are +inf."""
    n = graph.n_atoms
    dist = np.full((n, n), np.inf)
    for source, lengths in nx.all_pairs_shortest_path_length(graph.to_networkx()):
        for target, hops in lengths.items():
            dist[source, target] = hops
    return dist
