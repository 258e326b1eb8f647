"""Trilinear hexahedral linear-elasticity kernel.

Element stiffness via 2x2x2 Gauss quadrature, sparse assembly with
per-element scalar stiffness multipliers, symmetric Dirichlet elimination,
Jacobi-preconditioned conjugate-gradient solve (dense direct path for small
systems), and compliance evaluation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class MaterialError(ValueError):
    pass


class AssemblyError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# Natural coordinates of the 8 vertices, marching-cubes order.
_XI = np.array(
    [
        [-1, -1, -1],
        [+1, -1, -1],
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, +1],
        [+1, -1, +1],
        [+1, +1, +1],
        [-1, +1, +1],
    ],
    dtype=float,
)

_GP = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def _shape_gradients(xi, eta, zeta):
    """Gradients of the 8 trilinear shape functions w.r.t. natural coords."""
    g = np.empty((8, 3))
    for a in range(8):
        xa, ya, za = _XI[a]
        g[a, 0] = 0.125 * xa * (1 + eta * ya) * (1 + zeta * za)
        g[a, 1] = 0.125 * (1 + xi * xa) * ya * (1 + zeta * za)
        g[a, 2] = 0.125 * (1 + xi * xa) * (1 + eta * ya) * za
    return g


def _shape_values(xi, eta, zeta):
    return 0.125 * (1 + xi * _XI[:, 0]) * (1 + eta * _XI[:, 1]) * (1 + zeta * _XI[:, 2])


def element_stiffness_unit(h, nu):
    """24x24 stiffness matrix of a cube element with edge h and E = 1."""
    if h <= 0:
        raise MaterialError("element edge length must be positive")
    if not (0 <= nu < 0.5):
        raise MaterialError("Poisson ratio must lie in [0, 0.5)")
    c = 1.0 / ((1 + nu) * (1 - 2 * nu))
    C = c * np.array(
        [
            [1 - nu, nu, nu, 0, 0, 0],
            [nu, 1 - nu, nu, 0, 0, 0],
            [nu, nu, 1 - nu, 0, 0, 0],
            [0, 0, 0, (1 - 2 * nu) / 2, 0, 0],
            [0, 0, 0, 0, (1 - 2 * nu) / 2, 0],
            [0, 0, 0, 0, 0, (1 - 2 * nu) / 2],
        ]
    )
    jac = h / 2.0  # uniform cube: x = origin + (xi + 1) * h / 2
    detJ = jac ** 3
    K = np.zeros((24, 24))
    for xi in _GP:
        for eta in _GP:
            for zeta in _GP:
                dN = _shape_gradients(xi, eta, zeta) / jac  # physical gradients
                B = np.zeros((6, 24))
                for a in range(8):
                    dx, dy, dz = dN[a]
                    B[0, 3 * a] = dx
                    B[1, 3 * a + 1] = dy
                    B[2, 3 * a + 2] = dz
                    B[3, 3 * a] = dy
                    B[3, 3 * a + 1] = dx
                    B[4, 3 * a + 1] = dz
                    B[4, 3 * a + 2] = dy
                    B[5, 3 * a] = dz
                    B[5, 3 * a + 2] = dx
                K += B.T @ C @ B * detJ
    return 0.5 * (K + K.T)


def element_scalar_matrices(h):
    """(stiffness, mass) 8x8 matrices of the scalar trilinear element.

    stiffness = integral of grad(Na) . grad(Nb), mass = integral of Na * Nb,
    both over the cube of edge h.
    """
    jac = h / 2.0
    detJ = jac ** 3
    K = np.zeros((8, 8))
    M = np.zeros((8, 8))
    for xi in _GP:
        for eta in _GP:
            for zeta in _GP:
                dN = _shape_gradients(xi, eta, zeta) / jac
                N = _shape_values(xi, eta, zeta)
                K += dN @ dN.T * detJ
                M += np.outer(N, N) * detJ
    return 0.5 * (K + K.T), 0.5 * (M + M.T)


def element_dof_table(mesh):
    """(num_elements, 24) global DOF indices in element-local order."""
    nodes = mesh.element_node_table()
    return (3 * nodes[:, :, None] + np.arange(3)[None, None, :]).reshape(-1, 24)


@dataclass
class LinearSystem:
    K: sp.csr_matrix
    F: np.ndarray
    fixed_dofs: np.ndarray


def assemble(mesh, element_scalars, k0, fixed_dofs, loads):
    """Assemble K = sum_e scalar_e * scatter(k0) with Dirichlet elimination.

    Constrained rows/cols are zeroed symmetrically and the diagonal is set to
    the mean diagonal magnitude, keeping the system SPD with fixed dimensions.
    """
    element_scalars = np.asarray(element_scalars, dtype=float)
    if element_scalars.shape != (mesh.num_elements,):
        raise AssemblyError("element_scalars length must equal element count")
    if np.any(element_scalars <= 0):
        raise AssemblyError("non-positive stiffness multiplier (missing E_min floor?)")
    edof = element_dof_table(mesh)
    ndof = mesh.num_dofs
    iK = np.repeat(edof, 24, axis=1).ravel()
    jK = np.tile(edof, (1, 24)).ravel()
    data = (element_scalars[:, None, None] * k0[None, :, :]).ravel()
    K = sp.coo_matrix((data, (iK, jK)), shape=(ndof, ndof)).tocsr()

    fixed = np.unique(np.asarray(fixed_dofs, dtype=int))
    F = np.asarray(loads, dtype=float).copy()
    if fixed.size:
        dscale = K.diagonal().mean()
        keep = np.ones(ndof)
        keep[fixed] = 0.0
        P = sp.diags(keep)
        K = P @ K @ P
        diag_fix = np.zeros(ndof)
        diag_fix[fixed] = dscale
        K = (K + sp.diags(diag_fix)).tocsr()
        F[fixed] = 0.0
    return LinearSystem(K=K, F=F, fixed_dofs=fixed)


def solve_dense(system):
    """Direct dense factorization; test oracle for small systems."""
    U = np.linalg.solve(system.K.toarray(), system.F)
    U[system.fixed_dofs] = 0.0
    return U


def solve(system, x0=None, tol_rel=1e-8, max_iter=None, dense_limit=3000):
    """Solve K U = F to relative residual tol_rel.

    Uses dense direct factorization up to dense_limit DOFs, otherwise
    Jacobi-preconditioned conjugate gradients (optionally warm-started).
    """
    ndof = system.F.shape[0]
    if np.all(system.F == 0):
        return np.zeros(ndof)
    if ndof <= dense_limit:
        return solve_dense(system)
    if max_iter is None:
        max_iter = 10 * ndof
    dinv = 1.0 / system.K.diagonal()
    M = spla.LinearOperator((ndof, ndof), matvec=lambda v: dinv * v)
    U, info = spla.cg(system.K, system.F, x0=x0, rtol=tol_rel, atol=0.0,
                      maxiter=max_iter, M=M)
    res = np.linalg.norm(system.K @ U - system.F) / np.linalg.norm(system.F)
    if info != 0 or res > tol_rel * 10:
        raise SolverError(f"CG did not converge (info={info})", residual=res)
    U[system.fixed_dofs] = 0.0
    return U


def compliance(U, F):
    """Work of external loads U . F (equals U^T K U at the solution)."""
    U = np.asarray(U)
    F = np.asarray(F)
    if U.shape != F.shape:
        raise ValueError("displacement and load vectors must have equal length")
    return float(U @ F)


def element_strain_energies(U, k0, edof):
    """Per-element u_e^T k0 u_e for unit-modulus stiffness."""
    ue = U[edof]
    return np.einsum("ei,ij,ej->e", ue, k0, ue)
