"""Level-set boundary refinement: ersatz-material coupling, relaxed shape
sensitivities, Hilbertian extension-regularization, augmented-Lagrangian and
Hilbertian-projection constraint handling, Godunov Hamilton-Jacobi evolution,
and eikonal reinitialization.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem


class HandlerError(RuntimeError):
    pass


@dataclass
class ErsatzParams:
    eps0: float = 1e-3  # void stiffness ratio
    eta: float = 0.1    # Heaviside half-bandwidth; benchmarks use 2h

    def __post_init__(self):
        if not (0 < self.eps0 < 1) or self.eta <= 0:
            raise ValueError("require 0 < eps0 < 1 and eta > 0")


@dataclass
class EvolutionParams:
    gamma: float = 0.1
    n_steps: int = 10
    gamma_min: float = 1e-3
    reinit_tol: float = 1e-3   # times h
    reinit_cap: int = 200
    J_tol: float = 0.01        # relative objective change threshold
    C_tol: float = 0.01
    window: int = 5
    max_iters: int = 500

    def __post_init__(self):
        if not (0 < self.gamma < 1) or self.n_steps < 1:
            raise ValueError("require gamma in (0,1) and n_steps >= 1")


@dataclass
class AugmentedLagrangian:
    lam: float = 0.0
    Lam: float = 10.0
    xi: float = 1.1
    Lam_max: float = 100.0
    period: int = 5

    def __post_init__(self):
        if not (0 < self.Lam <= self.Lam_max) or self.xi <= 1:
            raise ValueError("require 0 < Lam <= Lam_max and xi > 1")


@dataclass
class HilbertianProjection:
    alpha_min_sq: float = 0.1
    beta: float = 0.5
    tau: float = 0.01

    def __post_init__(self):
        if not (0 < self.alpha_min_sq <= 1) or self.tau <= 0:
            raise ValueError("require 0 < alpha_min_sq <= 1 and tau > 0")


# ---- smoothed Heaviside ---------------------------------------------------


def heaviside(phi, eta):
    """Regularized Heaviside: 0 below the band, 1 above, sinusoidal ramp in
    between (H(0) = 1/2)."""
    phi = np.asarray(phi, dtype=float)
    out = np.where(
        phi <= -eta,
        0.0,
        np.where(
            phi >= eta,
            1.0,
            0.5 + phi / (2 * eta) + np.sin(np.pi * phi / eta) / (2 * np.pi),
        ),
    )
    return out


def heaviside_deriv(phi, eta):
    """(1 + cos(pi phi / eta)) / (2 eta) inside the band, 0 outside."""
    phi = np.asarray(phi, dtype=float)
    inside = np.abs(phi) <= eta
    return np.where(inside, (1.0 + np.cos(np.pi * phi / eta)) / (2 * eta), 0.0)


# ---- ersatz coupling ------------------------------------------------------


def element_centroid_values(mesh, phi):
    """Level-set value at element centroids (mean of the 8 nodal values)."""
    return np.asarray(phi)[mesh.element_node_table()].mean(axis=1)


def ersatz_scalars(mesh, phi, params):
    """Per-element stiffness multiplier (1 - H) + eps0 * H at centroids."""
    H = heaviside(element_centroid_values(mesh, phi), params.eta)
    return (1.0 - H) + params.eps0 * H


def ls_objective_and_volume(mesh, phi, strain_energies, params, V_f):
    """(J, V, C): ersatz compliance, smoothed material volume, and the
    normalized volume-constraint residual."""
    H = heaviside(element_centroid_values(mesh, phi), params.eta)
    scal = (1.0 - H) + params.eps0 * H
    J = float(np.sum(scal * strain_energies))
    V = float(np.sum(mesh.element_volume * (1.0 - H)))
    C = (V - V_f * mesh.domain_volume) / mesh.domain_volume
    return J, V, C


def centroid_gradient_norm(mesh, phi):
    """|grad phi| at element centroids from the trilinear interpolant."""
    v = np.asarray(phi)[mesh.element_node_table()]  # (ne, 8) in MC vertex order
    h = mesh.h
    dx = (v[:, 1] + v[:, 2] + v[:, 5] + v[:, 6] - v[:, 0] - v[:, 3] - v[:, 4] - v[:, 7]) / (4 * h)
    dy = (v[:, 2] + v[:, 3] + v[:, 6] + v[:, 7] - v[:, 0] - v[:, 1] - v[:, 4] - v[:, 5]) / (4 * h)
    dz = (v[:, 4] + v[:, 5] + v[:, 6] + v[:, 7] - v[:, 0] - v[:, 1] - v[:, 2] - v[:, 3]) / (4 * h)
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def shape_sensitivities(mesh, phi, strain_energies, params):
    """Nodal assembly of the boundary-concentrated sensitivity integrands.

    Returns (g_J, g_C): per-node lumped vectors for the objective (strain
    energy density) and the volume constraint (-1/V_D), each weighted by
    H'(phi_e) |grad phi|_e V_e and distributed equally to the 8 element nodes.
    """
    phi_c = element_centroid_values(mesh, phi)
    band = heaviside_deriv(phi_c, params.eta) * centroid_gradient_norm(mesh, phi)
    Ve = mesh.element_volume
    w = strain_energies / Ve  # strain energy density
    contrib_J = w * band * Ve / 8.0
    contrib_C = (-1.0 / mesh.domain_volume) * band * Ve / 8.0
    enodes = mesh.element_node_table()
    g_J = np.zeros(mesh.num_nodes)
    g_C = np.zeros(mesh.num_nodes)
    for a in range(8):
        np.add.at(g_J, enodes[:, a], contrib_J)
        np.add.at(g_C, enodes[:, a], contrib_C)
    return g_J, g_C


# ---- Hilbertian extension-regularization ----------------------------------


class HilbertianOperator:
    """SPD operator of the weighted H1 inner product, assembled and factored
    once per run; homogeneous Dirichlet rows on the load-region node set."""

    def __init__(self, mesh, ell, dirichlet_nodes):
        Klap, Mmass = fem.element_scalar_matrices(mesh.h)
        ke = ell ** 2 * Klap + Mmass
        enodes = mesh.element_node_table()
        nn = mesh.num_nodes
        iA = np.repeat(enodes, 8, axis=1).ravel()
        jA = np.tile(enodes, (1, 8)).ravel()
        data = np.tile(ke.ravel(), mesh.num_elements)
        A = sp.coo_matrix((data, (iA, jA)), shape=(nn, nn)).tocsr()
        fixed = np.unique(np.asarray(dirichlet_nodes, dtype=int))
        if fixed.size:
            dscale = A.diagonal().mean()
            keep = np.ones(nn)
            keep[fixed] = 0.0
            P = sp.diags(keep)
            A = P @ A @ P
            dfix = np.zeros(nn)
            dfix[fixed] = dscale
            A = (A + sp.diags(dfix)).tocsr()
        self.matrix = A
        self.fixed_nodes = fixed
        self._lu = spla.splu(A.tocsc())

    def extend(self, rhs):
        """Solve A v = rhs with zero values on the Dirichlet node set."""
        b = np.asarray(rhs, dtype=float).copy()
        b[self.fixed_nodes] = 0.0
        v = self._lu.solve(b)
        v[self.fixed_nodes] = 0.0
        res = np.linalg.norm(self.matrix @ v - b)
        nrm = np.linalg.norm(b)
        if nrm > 0 and res > 1e-8 * nrm:
            raise HandlerError(f"extension solve residual {res / nrm:.2e}")
        return v

    def inner(self, a, b):
        return float(np.asarray(a) @ (self.matrix @ np.asarray(b)))

    def norm(self, a):
        return np.sqrt(max(self.inner(a, a), 0.0))


def project_velocity(op, g_ext, mu_ext, C, handler):
    """Hilbertian-projection velocity: constraint-orthogonal descent plus a
    constraint-correction term with adaptively clamped coefficient alpha."""
    mu_norm = op.norm(mu_ext)
    if mu_norm == 0:
        raise HandlerError("constraint sensitivity has zero H-norm")
    proj = g_ext - (op.inner(mu_ext, g_ext) / mu_norm ** 2) * mu_ext
    proj_norm = op.norm(proj)

    alpha = handler.beta * C / mu_norm
    alpha_min_eff_sq = handler.alpha_min_sq * min(1.0, abs(C) / handler.tau) ** 2
    mag = np.sqrt(min(max(alpha * alpha, alpha_min_eff_sq), 1.0))
    alpha = np.copysign(mag, alpha) if alpha != 0 else mag * np.sign(C) if C != 0 else 0.0

    v = alpha * mu_ext / mu_norm
    if proj_norm >= 1e-14:
        v = v + np.sqrt(max(1.0 - alpha * alpha, 0.0)) * proj / proj_norm
    return v, float(alpha)


def al_update(handler, C, iteration):
    """Multiplier step every iteration; periodic bounded penalty growth."""
    handler.lam = handler.lam - handler.Lam * C
    if handler.period > 0 and iteration % handler.period == 0:
        handler.Lam = min(handler.xi * handler.Lam, handler.Lam_max)
    return handler


# ---- Godunov gradients and evolution --------------------------------------


def _grid(mesh, values):
    return np.asarray(values).reshape(mesh.nz + 1, mesh.ny + 1, mesh.nx + 1)


def _one_sided_diffs(g, h, axis):
    """(backward, forward) difference arrays; one-sided at domain boundaries."""
    d = np.diff(g, axis=axis) / h
    lo = np.take(d, [0], axis=axis)
    hi = np.take(d, [-1], axis=axis)
    back = np.concatenate([lo, d], axis=axis)
    fwd = np.concatenate([d, hi], axis=axis)
    return back, fwd


def godunov_gradient_norm(mesh, phi, speed_sign):
    """Upwind |grad phi| per node given the sign of the advection speed."""
    g = _grid(mesh, phi)
    pos = np.asarray(speed_sign).reshape(g.shape) > 0
    acc = np.zeros_like(g)
    for axis, hstep in ((0, mesh.h), (1, mesh.h), (2, mesh.h)):
        back, fwd = _one_sided_diffs(g, hstep, axis)
        up = np.maximum(back, 0.0) ** 2 + np.minimum(fwd, 0.0) ** 2
        dn = np.minimum(back, 0.0) ** 2 + np.maximum(fwd, 0.0) ** 2
        acc += np.where(pos, up, dn)
    return np.sqrt(acc).ravel()


def central_gradient_norm(mesh, phi):
    g = _grid(mesh, phi)
    acc = np.zeros_like(g)
    for axis in range(3):
        back, fwd = _one_sided_diffs(g, mesh.h, axis)
        acc += (0.5 * (back + fwd)) ** 2
    return np.sqrt(acc).ravel()


def hj_evolve(mesh, phi, velocity, params):
    """n_steps forward-Euler Hamilton-Jacobi steps with the velocity held
    fixed and the CFL time step dt = gamma h / max|v|."""
    v = np.asarray(velocity, dtype=float)
    vmax = np.max(np.abs(v))
    if vmax == 0:
        return np.array(phi, dtype=float, copy=True)
    dt = params.gamma * mesh.h / vmax
    out = np.array(phi, dtype=float, copy=True)
    for _ in range(params.n_steps):
        grad = godunov_gradient_norm(mesh, out, np.sign(v))
        out = out - dt * v * grad
    return out


def reinitialize(mesh, phi, params):
    """Pseudo-time eikonal iteration restoring |grad phi| = 1.

    The smeared sign is recomputed from the current field each step and acts
    as the upwinding speed. Returns (phi, converged flag).
    """
    out = np.array(phi, dtype=float, copy=True)
    h = mesh.h
    dtau = 0.5 * h
    for _ in range(params.reinit_cap):
        gc = central_gradient_norm(mesh, out)
        S = out / np.sqrt(out * out + h * h * gc * gc + 1e-300)
        grad = godunov_gradient_norm(mesh, out, np.sign(S))
        dphi = -dtau * S * (grad - 1.0)
        out = out + dphi
        if np.max(np.abs(dphi)) < params.reinit_tol * h:
            return out, True
    return out, False


# ---- initialization -------------------------------------------------------


def porous_initialization(mesh, params, freq=4.0, offset=0.2):
    """Periodic cosine-product hole seed, then reinitialized toward a signed
    distance field.

    The cosine product has amplitude 1/4, so an offset >= 1 leaves no strictly
    solid region and is rejected.
    """
    if not 0 <= offset < 1:
        raise ValueError("offset must lie in [0, 1)")
    x = mesh.all_node_coords() - np.asarray(mesh.origin)
    phi = -0.25 * np.prod(np.cos(freq * np.pi * x), axis=1) - offset / 4.0
    phi, _ = reinitialize(mesh, phi, params)
    return phi


# ---- outer optimization loop ----------------------------------------------


@dataclass
class LevelSetResult:
    phi: np.ndarray
    rows: list = field(default_factory=list)
    converged: bool = False


def run_levelset(mesh, phi0, bc, handler, ersatz, evol, V_f=0.4, nu=0.3,
                 dense_limit=3000, history=None, snapshot=None):
    """Outer loop: reinitialize, solve the ersatz state, form and extend
    sensitivities, build the velocity per the constraint handler, and evolve.

    The CFL number is cut by 25% after two consecutive increases of the
    driving objective (augmented Lagrangian value, or J for the projection
    handler). Stops when the last `window` relative objective changes are all
    below J_tol and the constraint residual is within C_tol.
    """
    k0 = fem.element_stiffness_unit(mesh.h, nu)
    edof = fem.element_dof_table(mesh)
    ell = 2.0 * mesh.h
    op = HilbertianOperator(mesh, ell, bc.load_nodes)
    use_projection = isinstance(handler, HilbertianProjection)

    phi = np.array(phi0, dtype=float, copy=True)
    gamma = evol.gamma
    rows = []
    drive_prev = None
    increases = 0
    J_hist = []
    U = None
    converged = False

    for it in range(1, evol.max_iters + 1):
        t0 = time.perf_counter()
        phi, reinit_ok = reinitialize(mesh, phi, evol)
        scalars = ersatz_scalars(mesh, phi, ersatz)
        system = fem.assemble(mesh, scalars, k0, bc.fixed_dofs, bc.loads)
        U = fem.solve(system, x0=U, dense_limit=dense_limit)
        q = fem.element_strain_energies(U, k0, edof)
        J, V, C = ls_objective_and_volume(mesh, phi, q, ersatz, V_f)

        g_J, g_C = shape_sensitivities(mesh, phi, q, ersatz)
        alpha = float("nan")
        if use_projection:
            g_ext = op.extend(g_J)
            mu_ext = op.extend(g_C)
            velocity, alpha = project_velocity(op, g_ext, mu_ext, C, handler)
            drive = J
        else:
            # (lam - Lam C)/V_D shares the band weight carried by g_C (up to
            # its -1/V_D integrand), so the combined field is g_J - (lam - Lam C) g_C
            g_L = g_J - (handler.lam - handler.Lam * C) * g_C
            velocity = op.extend(g_L)
            drive = J - handler.lam * C + 0.5 * handler.Lam * C * C

        row = {
            "stage": "levelset",
            "iteration": it,
            "J": J,
            "vol_frac": V / mesh.domain_volume,
            "C": C,
            "lam": getattr(handler, "lam", float("nan")),
            "Lam": getattr(handler, "Lam", float("nan")),
            "alpha": alpha,
            "gamma": gamma,
            "reinit_converged": reinit_ok,
            "seconds": time.perf_counter() - t0,
        }
        rows.append(row)
        if history is not None:
            history.append(**row)
        if snapshot is not None:
            snapshot(it, phi)

        J_hist.append(J)
        if len(J_hist) > evol.window + 1:
            rel = np.abs(np.diff(J_hist[-(evol.window + 1):])) / np.maximum(
                np.abs(J_hist[-evol.window:]), 1e-300
            )
            if np.all(rel < evol.J_tol) and abs(C) < evol.C_tol:
                converged = True
                break

        if drive_prev is not None and drive > drive_prev:
            increases += 1
            if increases >= 2:
                gamma = max(0.75 * gamma, evol.gamma_min)
                increases = 0
        else:
            increases = 0
        drive_prev = drive

        if not use_projection:
            al_update(handler, C, it)

        step = EvolutionParams(
            gamma=gamma, n_steps=evol.n_steps, gamma_min=evol.gamma_min,
            reinit_tol=evol.reinit_tol, reinit_cap=evol.reinit_cap,
            J_tol=evol.J_tol, C_tol=evol.C_tol, window=evol.window,
            max_iters=evol.max_iters,
        )
        phi = hj_evolve(mesh, phi, velocity, step)

    return LevelSetResult(phi=phi, rows=rows, converged=converged)
