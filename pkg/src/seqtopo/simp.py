"""Density-based compliance minimization: modified power-law interpolation,
sensitivity filtering, and Optimality Criteria updates with a volume bisection.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem


class OptimizerError(RuntimeError):
    pass


@dataclass
class SimpParams:
    p: float = 3.0
    E0: float = 1.0
    E_min: float = 1e-9
    V_f: float = 0.4
    R: float = 0.1  # filter radius; benchmarks use 2h
    move: float = 0.2
    eta_oc: float = 0.5
    drho_tol: float = 0.005  # stop on max density change
    max_iters: int = 500

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("penalization exponent must be >= 1")
        if not (0 < self.E_min < self.E0):
            raise ValueError("require 0 < E_min < E0")
        if not (0 < self.V_f < 1):
            raise ValueError("volume fraction must lie in (0, 1)")
        if self.R <= 0 or not (0 <= self.move < 1) or not (0 < self.eta_oc <= 1):
            raise ValueError("invalid filter/OC parameters")


def interpolate_modulus(rho, params):
    """E_min + rho^p (E0 - E_min)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError("density outside [0, 1]")
    return params.E_min + rho ** params.p * (params.E0 - params.E_min)


def compliance_sensitivity(rho, strain_energies, params):
    """-p rho^(p-1) (E0 - E_min) u_e^T k0 u_e per element."""
    rho = np.asarray(rho, dtype=float)
    p = params.p
    return -p * rho ** (p - 1) * (params.E0 - params.E_min) * strain_energies


def build_filter(mesh, R):
    """Sparse linearly-decaying centroid weight matrix and its row sums.

    Neighbor lists come from a lattice window of half-width ceil(R/h), which
    is exhaustive on a uniform structured grid.
    """
    ne = mesh.num_elements
    nx, ny, nz = mesh.nx, mesh.ny, mesh.nz
    w = int(np.ceil(R / mesh.h))
    ei = np.arange(ne)
    i, j, k = mesh.element_ijk(ei)
    rows, cols, vals = [], [], []
    offsets = [
        (di, dj, dk)
        for dk in range(-w, w + 1)
        for dj in range(-w, w + 1)
        for di in range(-w, w + 1)
    ]
    for di, dj, dk in offsets:
        dist = mesh.h * np.sqrt(di * di + dj * dj + dk * dk)
        weight = R - dist
        if weight <= 0:
            continue
        ii, jj, kk = i + di, j + dj, k + dk
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny) & (kk >= 0) & (kk < nz)
        rows.append(ei[ok])
        cols.append(mesh.element_index(ii[ok], jj[ok], kk[ok]))
        vals.append(np.full(ok.sum(), weight))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ne, ne),
    ).tocsr()
    return H, np.asarray(H.sum(axis=1)).ravel()


def filter_sensitivities(rho, raw, H, Hs, rho_floor=1e-3):
    """Density-weighted sensitivity filter (uniform element volumes cancel)."""
    raw = np.minimum(np.asarray(raw, dtype=float), -1e-30)
    num = H @ (rho * raw)
    return num / (np.maximum(rho, rho_floor) * Hs)


def oc_update(mesh, rho, filtered, params,
              mu_lo=1e-10, mu_hi=1e10, width_tol=1e-10, vol_tol=1e-9):
    """Optimality Criteria density update with bisection on the volume
    multiplier mu so the updated field meets the target volume."""
    rho = np.asarray(rho, dtype=float)
    g = np.asarray(filtered, dtype=float)
    Ve = mesh.element_volume
    target = params.V_f * mesh.domain_volume
    lo_bnd = np.maximum(0.0, rho - params.move)
    hi_bnd = np.minimum(1.0, rho + params.move)

    def candidate(mu):
        B = -g / (mu * Ve)
        return np.clip(rho * B ** params.eta_oc, lo_bnd, hi_bnd)

    if params.move == 0:
        return rho.copy()

    lo, hi = mu_lo, mu_hi
    if np.sum(candidate(lo)) * Ve < target or np.sum(candidate(hi)) * Ve > target:
        # target unreachable within the bracket; return nearest endpoint
        new = candidate(lo if np.sum(candidate(lo)) * Ve < target else hi)
        return new
    while (hi - lo) / (hi + lo) > width_tol:
        mid = 0.5 * (lo + hi)
        new = candidate(mid)
        vol = np.sum(new) * Ve
        if abs(vol - target) <= vol_tol * target:
            return new
        if vol > target:
            lo = mid
        else:
            hi = mid
    return candidate(0.5 * (lo + hi))


@dataclass
class BoundaryConditions:
    """Fixed DOF indices, nodal load vector, and the loaded node set."""
    fixed_dofs: np.ndarray
    loads: np.ndarray
    load_nodes: np.ndarray


def run_simp(mesh, bc, params, nu=0.3, history=None, dense_limit=3000,
             callback=None):
    """SIMP loop: solve -> sensitivity -> filter -> OC, stopping on the
    maximum density change. Returns (density field, history rows)."""
    k0 = fem.element_stiffness_unit(mesh.h, nu)
    edof = fem.element_dof_table(mesh)
    H, Hs = build_filter(mesh, params.R)
    rho = np.full(mesh.num_elements, params.V_f)
    rows = []
    U = None
    for it in range(1, params.max_iters + 1):
        t0 = time.perf_counter()
        scalars = interpolate_modulus(rho, params)
        system = fem.assemble(mesh, scalars, k0, bc.fixed_dofs, bc.loads)
        U = fem.solve(system, x0=U, dense_limit=dense_limit)
        J = fem.compliance(U, bc.loads)
        q = fem.element_strain_energies(U, k0, edof)
        raw = compliance_sensitivity(rho, q, params)
        filt = filter_sensitivities(rho, raw, H, Hs)
        new_rho = oc_update(mesh, rho, filt, params)
        drho_max = float(np.max(np.abs(new_rho - rho)))
        rho = new_rho
        vol_frac = float(np.sum(rho) * mesh.element_volume / mesh.domain_volume)
        row = {
            "stage": "simp",
            "iteration": it,
            "J": J,
            "vol_frac": vol_frac,
            "delta": drho_max,
            "seconds": time.perf_counter() - t0,
        }
        rows.append(row)
        if history is not None:
            history.append(**row)
        if callback is not None:
            callback(it, rho, J, drho_max)
        if drho_max < params.drho_tol:
            break
    return rho, rows
