"""Density interpolation, sensitivities, filtering, and OC updates."""

import numpy as np
import pytest

from seqtopo import fem, simp
from seqtopo.mesh import StructuredHexMesh


def test_interpolation_endpoints():
    params = simp.SimpParams(p=3.0, E0=1.0, E_min=1e-9)
    assert simp.interpolate_modulus(1.0, params) == pytest.approx(1.0)
    assert simp.interpolate_modulus(0.0, params) == pytest.approx(1e-9)
    assert simp.interpolate_modulus(0.5, params) == pytest.approx(
        1e-9 + 0.125 * (1 - 1e-9)
    )
    with pytest.raises(ValueError):
        simp.interpolate_modulus(1.2, params)


def test_params_validation():
    with pytest.raises(ValueError):
        simp.SimpParams(p=0.5)
    with pytest.raises(ValueError):
        simp.SimpParams(E_min=2.0)
    with pytest.raises(ValueError):
        simp.SimpParams(V_f=1.5)
    with pytest.raises(ValueError):
        simp.SimpParams(move=1.0)


def test_sensitivity_trivial_cases():
    params = simp.SimpParams()
    rho = np.array([0.3, 0.8])
    assert np.all(simp.compliance_sensitivity(rho, np.zeros(2), params) == 0.0)
    p1 = simp.SimpParams(p=1.0)
    q = np.array([2.0, 5.0])
    expected = -(p1.E0 - p1.E_min) * q
    assert np.allclose(simp.compliance_sensitivity(rho, q, p1), expected)


def test_sensitivity_matches_finite_differences():
    mesh = StructuredHexMesh(3, 2, 2, 0.5)
    rng = np.random.default_rng(7)
    rho = rng.uniform(0.3, 0.9, mesh.num_elements)
    params = simp.SimpParams(p=3.0, E0=1.0, E_min=1e-9)
    k0 = fem.element_stiffness_unit(mesh.h, 0.3)
    fixed = np.arange(3 * (mesh.nx + 1) * (mesh.ny + 1))  # clamp the k=0 layer
    loads = np.zeros(mesh.num_dofs)
    loads[-1] = -1.0

    def solve_compliance(r):
        scalars = simp.interpolate_modulus(r, params)
        system = fem.assemble(mesh, scalars, k0, fixed, loads)
        U = fem.solve_dense(system)
        return fem.compliance(U, loads)

    system = fem.assemble(mesh, simp.interpolate_modulus(rho, params), k0,
                          fixed, loads)
    U = fem.solve_dense(system)
    q = fem.element_strain_energies(U, k0, fem.element_dof_table(mesh))
    analytic = simp.compliance_sensitivity(rho, q, params)

    step = 1e-6
    for e in range(mesh.num_elements):
        up = rho.copy()
        dn = rho.copy()
        up[e] += step
        dn[e] -= step
        fd = (solve_compliance(up) - solve_compliance(dn)) / (2 * step)
        assert abs(analytic[e] - fd) < 1e-4 * abs(fd)


def test_filter_self_only_below_h():
    mesh = StructuredHexMesh(3, 2, 2, 0.5)
    H, Hs = simp.build_filter(mesh, 0.9 * mesh.h)
    rng = np.random.default_rng(3)
    rho = rng.uniform(0.2, 1.0, mesh.num_elements)
    raw = -rng.uniform(0.1, 2.0, mesh.num_elements)
    assert np.allclose(simp.filter_sensitivities(rho, raw, H, Hs), raw)


def test_filter_uniform_field_reproduction():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    H, Hs = simp.build_filter(mesh, 2 * mesh.h)
    rho = np.full(mesh.num_elements, 0.4)
    raw = np.full(mesh.num_elements, -3.0)
    assert np.allclose(simp.filter_sensitivities(rho, raw, H, Hs), raw)


def test_filter_matches_brute_force():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    R = 2 * mesh.h
    rng = np.random.default_rng(11)
    rho = rng.uniform(0.1, 1.0, mesh.num_elements)
    raw = -rng.uniform(0.1, 5.0, mesh.num_elements)
    H, Hs = simp.build_filter(mesh, R)
    fast = simp.filter_sensitivities(rho, raw, H, Hs)

    centroids = mesh.element_centroids()
    expected = np.empty(mesh.num_elements)
    for e in range(mesh.num_elements):
        w = np.maximum(0.0, R - np.linalg.norm(centroids - centroids[e], axis=1))
        expected[e] = (w @ (rho * raw)) / (max(rho[e], 1e-3) * w.sum())
    assert np.max(np.abs(fast - expected)) < 1e-12


def test_oc_uniform_stationary_point():
    mesh = StructuredHexMesh(4, 2, 2, 0.5)
    params = simp.SimpParams(V_f=0.4, move=0.2)
    rho = np.full(mesh.num_elements, 0.4)
    g = np.full(mesh.num_elements, -2.0)
    new = simp.oc_update(mesh, rho, g, params)
    assert np.max(np.abs(new - rho)) < 1e-6


def test_oc_zero_move():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    params = simp.SimpParams(V_f=0.5, move=0.0)
    rho = np.array([0.2, 0.8])
    assert np.array_equal(simp.oc_update(mesh, rho, np.array([-1.0, -2.0]), params),
                          rho)


def test_oc_two_element_hand_example():
    mesh = StructuredHexMesh(2, 1, 1, 1.0)
    params = simp.SimpParams(V_f=0.5, move=0.9, eta_oc=0.5)
    rho = np.array([0.5, 0.5])
    g = np.array([-4.0, -1.0])
    new = simp.oc_update(mesh, rho, g, params)
    # the bisection closes rho_1/rho_2 = sqrt(4/1) = 2 at total volume 1
    assert new[0] == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert new[1] == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert new.sum() * mesh.element_volume == pytest.approx(1.0, abs=1e-6)


def test_run_simp_immediate_stop(small_cantilever):
    mesh, bc = small_cantilever
    params = simp.SimpParams(R=2 * mesh.h, drho_tol=1.0)
    rho, rows = simp.run_simp(mesh, bc, params)
    assert len(rows) == 1


def test_run_simp_small_benchmark(small_cantilever):
    mesh, bc = small_cantilever
    params = simp.SimpParams(R=2 * mesh.h, drho_tol=0.02, max_iters=60)
    rho, rows = simp.run_simp(mesh, bc, params)
    assert np.all((rho >= 0) & (rho <= 1))
    assert rows[-1]["vol_frac"] == pytest.approx(0.4, abs=1e-6)
    assert rows[-1]["delta"] < 0.02
    # compliance improves over the uniform-density start
    assert rows[-1]["J"] < rows[0]["J"]
