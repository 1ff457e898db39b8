import numpy as np
import pytest

from tests.conftest import FIXTURES
from zulf_engine.data.structure_stream import (Atom, MolecularGraph, STRUCTURE_SUFFIXES, StructureFormat,
                                               bond_distance_matrix, parse_structure, read_structure,
                                               serialize_molv2000, sniff_format)
from zulf_engine.errors import DomainError, StructureParseError


def test_methane_mol_parses_atoms_and_bonds():
    graph = read_structure(FIXTURES / "methane.mol")
    assert graph.title == "methane"
    assert graph.n_atoms == 5
    assert [a.element for a in graph.atoms] == ["C", "H", "H", "H", "H"]
    assert graph.bonds == ((0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1))
    assert graph.formula() == {"C": 1, "H": 4}


def test_water_xyz_infers_two_oh_bonds_and_no_hh_bond():
    graph = read_structure(FIXTURES / "water.xyz")
    assert graph.title == "water"
    assert [(i, j) for i, j, _ in graph.bonds] == [(0, 1), (0, 2)]


def test_hydrogen_molecule_gets_one_bond():
    graph = read_structure(FIXTURES / "h2.xyz")
    assert [(i, j) for i, j, _ in graph.bonds] == [(0, 1)]


def test_ethane_bond_graph():
    graph = read_structure(FIXTURES / "ethane.xyz")
    assert len(graph.bonds) == 7
    assert graph.neighbours(0) == [1, 2, 3, 4]


def test_molv2000_round_trip_keeps_atoms_bonds_and_isotopes():
    graph = read_structure(FIXTURES / "methane.mol")
    labelled = MolecularGraph((Atom("C", graph.atoms[0].position, 13),) + graph.atoms[1:],
                              graph.bonds, graph.title)
    back = parse_structure(serialize_molv2000(labelled), "mol")
    assert [a.element for a in back.atoms] == [a.element for a in labelled.atoms]
    assert back.bonds == labelled.bonds
    assert back.atoms[0].isotope == 13
    assert back.atoms[1].isotope is None
    np.testing.assert_allclose(back.positions(), labelled.positions(), atol=1e-4)


def test_v3000_is_rejected_on_counts_line():
    text = "t\n\n\n  0  0  0     0  0            999 V3000\nM  END\n"
    with pytest.raises(StructureParseError) as err:
        parse_structure(text, "mol")
    assert err.value.line_number == 4


def test_truncated_mol_reports_a_line():
    with pytest.raises(StructureParseError) as err:
        read_structure(FIXTURES / "broken.mol")
    assert err.value.line_number is not None


def test_bad_bond_reference_names_its_line():
    text = ("t\n\n\n  2  1  0  0  0  0  0  0  0  0999 V2000\n"
            "    0.0000    0.0000    0.0000 C   0  0\n"
            "    1.0000    0.0000    0.0000 H   0  0\n"
            "  1  3  1  0\nM  END\n")
    with pytest.raises(StructureParseError) as err:
        parse_structure(text, "mol")
    assert err.value.line_number == 7


def test_xyz_count_mismatch_points_at_header():
    with pytest.raises(StructureParseError) as err:
        parse_structure("3\nx\nH 0 0 0\nH 0 0 0.74\n", "xyz")
    assert err.value.line_number == 1


def test_unknown_element_is_a_parse_error():
    with pytest.raises(StructureParseError) as err:
        parse_structure("1\nx\nQq 0 0 0\n", "xyz")
    assert err.value.line_number == 3


def test_format_names():
    assert sniff_format("a.sdf") is StructureFormat.MOLV2000
    assert sniff_format("a.XYZ") is StructureFormat.XYZ
    with pytest.raises(DomainError):
        StructureFormat.from_name("pdb")


def test_bond_distance_matrix_counts_hops():
    dist = bond_distance_matrix(read_structure(FIXTURES / "methane.mol"))
    assert dist[0, 1] == 1
    assert dist[1, 2] == 2
    assert dist[3, 3] == 0


def test_bond_distance_matrix_unreachable_is_inf():
    graph = parse_structure("4\nx\nH 0 0 0\nH 0 0 0.74\nH 10 0 0\nH 10 0 0.74\n", "xyz")
    dist = bond_distance_matrix(graph)
    assert np.isinf(dist[0, 2])
    assert dist[2, 3] == 1


@pytest.mark.parametrize("name", ["ethane.xyz", "methane.mol", "water.xyz"])
def test_bond_distances_are_a_metric(name):
    dist = bond_distance_matrix(read_structure(FIXTURES / name))
    n = len(dist)
    np.testing.assert_array_equal(dist, dist.T)
    assert np.all(np.diag(dist) == 0)
    for k in range(n):
        assert np.all(dist <= dist[:, [k]] + dist[[k], :])


def test_every_suffix_sniffs_to_a_format():
    assert {sniff_format(f"a{s}") for s in STRUCTURE_SUFFIXES} == set(StructureFormat)
