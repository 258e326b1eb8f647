"""Mesh indexing, connectivity, and region selection."""

import numpy as np
import pytest

from seqtopo.mesh import (
    ConfigError,
    RegionSelector,
    StructuredHexMesh,
    select_nodes,
    selector_dof_indices,
)


def test_counts():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    assert mesh.num_nodes == 5 * 3 * 3
    assert mesh.num_elements == 16
    assert mesh.num_dofs == 3 * 45
    assert mesh.lengths == (2.0, 1.0, 1.0)
    assert mesh.domain_volume == pytest.approx(2.0)


def test_invalid_mesh():
    with pytest.raises(ConfigError):
        StructuredHexMesh(0, 2, 2, 0.5)
    with pytest.raises(ConfigError):
        StructuredHexMesh(4, 2, 2, -1.0)


def test_node_coords():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    assert np.allclose(mesh.node_coords(mesh.node_index(0, 0, 0)), (0, 0, 0))
    assert np.allclose(mesh.node_coords(mesh.node_index(4, 2, 2)), (2.0, 1.0, 1.0))
    assert np.allclose(mesh.node_coords(mesh.node_index(1, 1, 1)), (0.5, 0.5, 0.5))
    with pytest.raises(IndexError):
        mesh.node_coords(mesh.num_nodes)


def test_index_round_trip():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    for n in range(mesh.num_nodes):
        assert mesh.node_index(*mesh.node_ijk(n)) == n
    for e in range(mesh.num_elements):
        assert mesh.element_index(*mesh.element_ijk(e)) == e


def test_single_element_nodes():
    mesh = StructuredHexMesh(1, 1, 1, 1.0)
    assert sorted(mesh.element_nodes(0)) == list(range(8))
    # bottom face counterclockwise from the origin, then the top face above
    coords = mesh.all_node_coords()[mesh.element_nodes(0)]
    expected = [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
    ]
    assert np.allclose(coords, expected)


def test_face_adjacent_elements_share_four_nodes():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    shared = set(mesh.element_nodes(0)) & set(mesh.element_nodes(1))
    assert len(shared) == 4


def test_interior_nodes_have_eight_elements():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    nelems = mesh.node_elements()
    for n in range(mesh.num_nodes):
        i, j, k = mesh.node_ijk(n)
        interior = 0 < i < 4 and 0 < j < 2 and 0 < k < 2
        if interior:
            assert len(nelems[n]) == 8


def test_node_element_adjacency_symmetry():
    mesh = StructuredHexMesh(3, 2, 2, 0.5)
    tab = mesh.element_node_table()
    nelems = mesh.node_elements()
    for e in range(mesh.num_elements):
        for n in tab[e]:
            assert e in nelems[n]
    for n in range(mesh.num_nodes):
        for e in nelems[n]:
            assert n in tab[e]


def test_element_centroids():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    assert np.allclose(mesh.element_centroids(), [(0.5, 0.5, 0.5), (1.5, 0.5, 0.5)])


def test_face_selection_counts():
    mesh = StructuredHexMesh(40, 20, 20, 0.05)
    nodes = select_nodes(mesh, RegionSelector(kind="face", face="x0"))
    assert len(nodes) == 21 * 21


def test_disk_on_face_matches_brute_force():
    mesh = StructuredHexMesh(40, 20, 20, 0.05)
    sel = RegionSelector(kind="disk-on-face", face="x1",
                         center=(2.0, 0.5, 0.5), radius=0.1)
    nodes = select_nodes(mesh, sel)
    coords = mesh.all_node_coords()
    tol = 1e-9 * mesh.h
    expected = [
        n for n in range(mesh.num_nodes)
        if abs(coords[n, 0] - 2.0) <= tol
        and (coords[n, 1] - 0.5) ** 2 + (coords[n, 2] - 0.5) ** 2
        <= (0.1 + tol) ** 2
    ]
    assert list(nodes) == expected
    assert len(nodes) > 0


def test_zero_extent_box_selects_one_node():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    sel = RegionSelector(kind="box", center=(0.5, 0.5, 0.5), extents=(0, 0, 0))
    assert len(select_nodes(mesh, sel)) == 1


def test_strip_on_face():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    sel = RegionSelector(kind="strip-on-face", face="z0",
                         center=(1.75, 0.5, 0.0), extents=(0.5, 1.0, 0.0))
    nodes = select_nodes(mesh, sel)
    coords = mesh.all_node_coords()[nodes]
    assert np.all(coords[:, 2] == 0.0)
    assert np.all(coords[:, 0] >= 1.5 - 1e-12)


def test_unknown_face_and_kind():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    with pytest.raises(ConfigError):
        select_nodes(mesh, RegionSelector(kind="face", face="w0"))
    with pytest.raises(ConfigError):
        select_nodes(mesh, RegionSelector(kind="blob", face="x0"))


def test_selector_dof_indices():
    dofs = selector_dof_indices(np.array([2, 5]), dofs=("x", "z"))
    assert sorted(dofs) == [6, 8, 15, 17]
