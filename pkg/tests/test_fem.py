"""Element stiffness, assembly, and solver oracles."""

import numpy as np
import pytest

from seqtopo import fem
from seqtopo.mesh import StructuredHexMesh


def rigid_modes(mesh):
    """Six rigid-body displacement vectors (3 translations, 3 rotations)."""
    coords = mesh.all_node_coords()
    modes = []
    for ax in range(3):
        m = np.zeros((mesh.num_nodes, 3))
        m[:, ax] = 1.0
        modes.append(m.ravel())
    center = coords.mean(axis=0)
    for ax in range(3):
        omega = np.zeros(3)
        omega[ax] = 1.0
        modes.append(np.cross(omega, coords - center).ravel())
    return modes


def test_element_stiffness_symmetry():
    k0 = fem.element_stiffness_unit(0.05, 0.3)
    assert np.max(np.abs(k0 - k0.T)) < 1e-12


def test_element_stiffness_rigid_translation():
    k0 = fem.element_stiffness_unit(1.0, 0.3)
    tx = np.zeros(24)
    tx[0::3] = 1.0
    assert np.max(np.abs(k0 @ tx)) < 1e-10 * np.max(np.abs(k0))


def test_element_stiffness_six_zero_eigenvalues():
    k0 = fem.element_stiffness_unit(0.7, 0.25)
    w = np.linalg.eigvalsh(k0)
    assert np.sum(w <= 1e-10 * w.max()) == 6


def test_material_validation():
    with pytest.raises(fem.MaterialError):
        fem.element_stiffness_unit(1.0, 0.5)
    with pytest.raises(fem.MaterialError):
        fem.element_stiffness_unit(1.0, -0.1)
    with pytest.raises(fem.MaterialError):
        fem.element_stiffness_unit(0.0, 0.3)


def test_scalar_element_matrices():
    K, M = fem.element_scalar_matrices(0.5)
    # Laplacian annihilates constants; mass integrates to the element volume
    assert np.max(np.abs(K @ np.ones(8))) < 1e-12
    assert M.sum() == pytest.approx(0.5 ** 3, rel=1e-12)
    assert np.max(np.abs(K - K.T)) < 1e-12
    assert np.max(np.abs(M - M.T)) < 1e-12


def test_assemble_single_element():
    mesh = StructuredHexMesh(1, 1, 1, 1.0)
    k0 = fem.element_stiffness_unit(1.0, 0.3)
    fixed = np.array([0, 1, 2])
    system = fem.assemble(mesh, np.ones(1), k0, fixed, np.zeros(24))
    # permute global DOFs into element-local vertex order before comparing
    perm = fem.element_dof_table(mesh)[0]
    K = system.K.toarray()[np.ix_(perm, perm)]
    free = np.flatnonzero(~np.isin(perm, fixed))
    assert np.allclose(K[np.ix_(free, free)], k0[np.ix_(free, free)])
    fixed_local = np.flatnonzero(np.isin(perm, fixed))
    assert np.allclose(K[np.ix_(fixed_local, free)], 0.0)
    assert np.allclose(K[np.ix_(free, fixed_local)], 0.0)
    # eliminated rows keep the mean diagonal magnitude
    assert np.allclose(np.diag(K)[fixed_local], k0.diagonal().mean())


def test_assemble_scalar_linearity():
    mesh = StructuredHexMesh(2, 1, 1, 0.5)
    k0 = fem.element_stiffness_unit(0.5, 0.3)
    loads = np.zeros(mesh.num_dofs)
    a = fem.assemble(mesh, np.full(2, 0.7), k0, [], loads).K.toarray()
    b = fem.assemble(mesh, np.full(2, 1.4), k0, [], loads).K.toarray()
    assert np.allclose(b, 2.0 * a)


def test_assemble_validation():
    mesh = StructuredHexMesh(2, 1, 1, 0.5)
    k0 = fem.element_stiffness_unit(0.5, 0.3)
    with pytest.raises(fem.AssemblyError):
        fem.assemble(mesh, np.ones(3), k0, [], np.zeros(mesh.num_dofs))
    with pytest.raises(fem.AssemblyError):
        fem.assemble(mesh, np.zeros(2), k0, [], np.zeros(mesh.num_dofs))


def dense_reference_assembly(mesh, scalars, k0):
    """Independent triple-loop dense assembly oracle."""
    ndof = mesh.num_dofs
    K = np.zeros((ndof, ndof))
    for e in range(mesh.num_elements):
        nodes = mesh.element_nodes(e)
        dofs = [3 * n + c for n in nodes for c in range(3)]
        for a in range(24):
            for b in range(24):
                K[dofs[a], dofs[b]] += scalars[e] * k0[a, b]
    return K


def test_assembly_matches_dense_reference(small_cantilever):
    mesh, bc = small_cantilever
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    scalars = np.ones(mesh.num_elements)
    system = fem.assemble(mesh, scalars, k0, [], bc.loads)
    ref = dense_reference_assembly(mesh, scalars, k0)
    assert np.max(np.abs(system.K.toarray() - ref)) < 1e-12 * np.max(np.abs(ref))


def test_solve_zero_load(small_cantilever):
    mesh, bc = small_cantilever
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    system = fem.assemble(mesh, np.ones(mesh.num_elements), k0, bc.fixed_dofs,
                          np.zeros(mesh.num_dofs))
    assert np.all(fem.solve(system) == 0.0)


def test_solve_scalar_system():
    import scipy.sparse as sp

    system = fem.LinearSystem(K=sp.csr_matrix(np.array([[2.0]])),
                              F=np.array([3.0]), fixed_dofs=np.array([], dtype=int))
    assert fem.solve(system) == pytest.approx(1.5)


def test_cg_matches_dense_lu(small_cantilever):
    mesh, bc = small_cantilever
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    system = fem.assemble(mesh, np.ones(mesh.num_elements), k0, bc.fixed_dofs,
                          bc.loads)
    U_lu = fem.solve_dense(system)
    U_cg = fem.solve(system, dense_limit=0)  # force the iterative path
    assert np.linalg.norm(U_cg - U_lu) < 1e-7 * np.linalg.norm(U_lu)


def test_compliance_values():
    assert fem.compliance(np.zeros(6), np.zeros(6)) == 0.0
    assert fem.compliance([1.0, 2.0], [3.0, 4.0]) == pytest.approx(11.0)
    with pytest.raises(ValueError):
        fem.compliance(np.zeros(3), np.zeros(4))


def test_compliance_consistency(small_cantilever):
    mesh, bc = small_cantilever
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    system = fem.assemble(mesh, np.ones(mesh.num_elements), k0, bc.fixed_dofs,
                          bc.loads)
    U = fem.solve(system)
    uf = fem.compliance(U, bc.loads)
    uku = float(U @ (system.K @ U))
    assert uf == pytest.approx(uku, rel=1e-6)


def test_strain_energies_sum_to_compliance(small_cantilever):
    mesh, bc = small_cantilever
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    system = fem.assemble(mesh, np.ones(mesh.num_elements), k0, bc.fixed_dofs,
                          bc.loads)
    U = fem.solve(system)
    q = fem.element_strain_energies(U, k0, fem.element_dof_table(mesh))
    assert np.all(q >= 0)
    assert q.sum() == pytest.approx(fem.compliance(U, bc.loads), rel=1e-6)
