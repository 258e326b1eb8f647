"""Nodal mapping, marching cubes, closest-point, and signed distance tests."""

import numpy as np
import pytest

from seqtopo import transfer
from seqtopo.mesh import StructuredHexMesh


# ---- nodal density mapping -------------------------------------------------


def test_nodal_map_constant_field():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    rho = np.full(mesh.num_elements, 0.37)
    nodal = transfer.map_densities_to_nodes(mesh, rho)
    assert np.allclose(nodal, 0.37, atol=1e-12)


def test_nodal_map_linear_reproduction():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    cent = mesh.element_centroids()
    rho = 0.1 + 0.3 * cent[:, 0]  # linear in x, range stays within [0, 1]
    nodal = transfer.map_densities_to_nodes(mesh, rho)
    coords = mesh.all_node_coords()
    expected = 0.1 + 0.3 * coords[:, 0]
    interior = np.array([
        len(elems) == 8 for elems in mesh.node_elements()
    ])
    assert np.max(np.abs(nodal[interior] - expected[interior])) < 1e-10


def test_nodal_map_matches_dense_least_squares():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    rng = np.random.default_rng(5)
    rho = rng.uniform(0.1, 0.9, mesh.num_elements)
    nodal = transfer.map_densities_to_nodes(mesh, rho)
    coords = mesh.all_node_coords()
    cent = mesh.element_centroids()
    for n, elems in enumerate(mesh.node_elements()):
        if len(elems) != 8:
            continue
        X = np.hstack([np.ones((8, 1)), cent[elems]])
        a, *_ = np.linalg.lstsq(X, rho[elems], rcond=None)
        expected = a[0] + a[1:] @ coords[n]
        assert abs(nodal[n] - np.clip(expected, 0, 1)) < 1e-10


def test_nodal_map_clamps():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    nodal = transfer.map_densities_to_nodes(mesh, np.array([0.0, 1.0]))
    assert np.all((nodal >= 0) & (nodal <= 1))


# ---- marching cubes --------------------------------------------------------


def sphere_field(mesh, center, radius):
    return np.linalg.norm(mesh.all_node_coords() - np.asarray(center), axis=1) - radius


def edge_incidence(surface):
    counts = {}
    for tri in surface.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    return counts


def test_no_crossing_gives_empty_surface():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    surf = transfer.extract_isosurface(mesh, np.full(mesh.num_nodes, 0.8), 0.5)
    assert surf.num_triangles == 0


def test_single_corner_case():
    mesh = StructuredHexMesh(1, 1, 1, 1.0)
    nodal = np.zeros(8)
    nodal[mesh.node_index(0, 0, 0)] = 1.0
    surf = transfer.extract_isosurface(mesh, nodal, 0.5)
    assert surf.num_triangles == 1
    expected = {(0.5, 0.0, 0.0), (0.0, 0.5, 0.0), (0.0, 0.0, 0.5)}
    got = {tuple(np.round(v, 12)) for v in surf.vertices[surf.triangles[0]]}
    assert got == expected
    # the normal points away from the solid corner at the origin
    normal, _ = surf.normals_and_areas()
    assert normal[0] @ np.array([1.0, 1.0, 1.0]) > 0


def test_sphere_surface_watertight_and_area():
    mesh = StructuredHexMesh(20, 20, 20, 0.05, origin=(0, 0, 0))
    phi = sphere_field(mesh, (0.5, 0.5, 0.5), 0.3)
    surf = transfer.extract_isosurface(mesh, phi, 0.0)
    counts = edge_incidence(surf)
    assert all(c == 2 for c in counts.values())
    _, areas = surf.normals_and_areas()
    assert areas.sum() == pytest.approx(4 * np.pi * 0.3 ** 2, rel=0.1)


def test_vertices_lie_on_iso_level():
    mesh = StructuredHexMesh(10, 10, 10, 0.1)
    phi = sphere_field(mesh, (0.5, 0.5, 0.5), 0.3)
    surf = transfer.extract_isosurface(mesh, phi, 0.0)
    # every vertex sits on a lattice edge; linear interpolation of the nodal
    # field along that edge must return the iso value
    grid = phi.reshape(mesh.nz + 1, mesh.ny + 1, mesh.nx + 1)
    for v in surf.vertices:
        frac = v / mesh.h
        base = np.floor(frac + 1e-9).astype(int)
        t = frac - base
        axis = int(np.argmax(t))
        i, j, k = base
        lo = grid[k, j, i]
        step = [0, 0, 0]
        step[axis] = 1
        hi = grid[k + step[2], j + step[1], i + step[0]]
        val = lo + t[axis] * (hi - lo)
        assert abs(val) < 1e-12


def test_nonfinite_field_rejected():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    bad = np.zeros(mesh.num_nodes)
    bad[0] = np.nan
    with pytest.raises(transfer.GeometryError):
        transfer.extract_isosurface(mesh, bad, 0.5)


# ---- closest point on triangle ---------------------------------------------

TRI = (np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))


def test_closest_point_vertex():
    cp, d2 = transfer.closest_point_on_triangle(TRI[0], *TRI)
    assert np.allclose(cp, TRI[0])
    assert d2 == 0.0


def test_closest_point_interior_projection():
    centroid = np.mean(TRI, axis=0)
    p = centroid + np.array([0.0, 0.0, 2.0])
    cp, d2 = transfer.closest_point_on_triangle(p, *TRI)
    assert np.allclose(cp, centroid)
    assert d2 == pytest.approx(4.0)


def test_closest_point_edge_case():
    cp, d2 = transfer.closest_point_on_triangle(np.array([2.0, 2.0, 0.0]), *TRI)
    assert np.allclose(cp, [0.5, 0.5, 0.0])
    assert d2 == pytest.approx(4.5)


def dense_triangle_samples(n):
    """Barycentric grid over the reference triangle with about n points."""
    m = int(np.sqrt(2 * n))
    u = np.linspace(0.0, 1.0, m)
    U, V = np.meshgrid(u, u)
    keep = (U + V) <= 1.0 + 1e-12
    return U[keep], V[keep]


def test_closest_point_matches_dense_sampling_oracle():
    rng = np.random.default_rng(19)
    a = np.array([0.2, -0.1, 0.3])
    b = np.array([1.1, 0.4, -0.2])
    c = np.array([-0.3, 1.2, 0.5])
    u, v = dense_triangle_samples(1_000_000)
    samples = (1 - u - v)[:, None] * a + u[:, None] * b + v[:, None] * c
    # worst-case distance from any triangle point to its nearest grid sample
    m = int(np.sqrt(2 * 1_000_000))
    spacing = (np.linalg.norm(b - a) + np.linalg.norm(c - a)) / (m - 1)
    for _ in range(25):
        p = rng.uniform(-1.5, 2.0, 3)
        _, d2 = transfer.closest_point_on_triangle(p, a, b, c)
        d = np.sqrt(d2)
        chunk_min = np.inf
        for s in np.array_split(samples, 10):
            chunk_min = min(chunk_min, np.min(np.sum((s - p) ** 2, axis=1)))
        oracle = np.sqrt(chunk_min)
        assert d <= oracle + 1e-6       # exact result cannot exceed a sample
        assert oracle - d <= spacing    # and the oracle grid brackets it


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(2)
    corners = rng.normal(size=(50, 3, 3))
    for _ in range(20):
        p = rng.normal(size=3)
        fast = transfer._closest_sqdist_many(p, corners)
        slow = np.array([
            transfer.closest_point_on_triangle(p, *tri)[1] for tri in corners
        ])
        assert np.max(np.abs(fast - slow)) < 1e-12


# ---- signed distance field -------------------------------------------------


def test_sdf_planar_square():
    mesh = StructuredHexMesh(2, 2, 2, 0.5, origin=(0, 0, 0))
    verts = np.array([
        [0, 0, 0.5], [1, 0, 0.5], [1, 1, 0.5], [0, 1, 0.5],
    ], dtype=float)
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    surf = transfer.TriangleSurface(verts, tris)
    density = np.ones(mesh.num_nodes)
    phi = transfer.build_sdf(mesh, surf, density, 0.5)
    node = mesh.node_index(1, 1, 0)  # (0.5, 0.5, 0) below the plane
    assert phi[node] == pytest.approx(-0.5)


def test_sdf_vertex_node_is_zero():
    mesh = StructuredHexMesh(2, 2, 2, 0.5)
    verts = np.array([[0.5, 0.5, 0.5], [1.0, 0.5, 0.5], [0.5, 1.0, 0.5]])
    surf = transfer.TriangleSurface(verts, np.array([[0, 1, 2]]))
    phi = transfer.unsigned_distances(mesh, surf)
    assert phi[mesh.node_index(1, 1, 1)] == 0.0


def test_sphere_sdf_accelerated_bit_identical_and_accurate():
    mesh = StructuredHexMesh(20, 20, 20, 0.05)
    assert mesh.num_nodes <= 10_000
    center, radius = (0.5, 0.5, 0.5), 0.3
    phi_exact = sphere_field(mesh, center, radius)
    surf = transfer.extract_isosurface(mesh, phi_exact, 0.0)
    density = np.where(phi_exact <= 0, 1.0, 0.0)
    fast = transfer.unsigned_distances(mesh, surf)
    brute = transfer.unsigned_distances(mesh, surf, brute_force=True)
    assert np.array_equal(fast, brute)
    sdf = transfer.build_sdf(mesh, surf, density, 0.5)
    assert np.max(np.abs(np.abs(sdf) - np.abs(phi_exact))) <= mesh.h


def test_empty_surface_rejected():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    surf = transfer.TriangleSurface(np.empty((0, 3)), np.empty((0, 3), dtype=int))
    with pytest.raises(transfer.GeometryError):
        transfer.unsigned_distances(mesh, surf)
