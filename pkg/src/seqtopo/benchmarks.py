"""Benchmark problem definitions on the 2 x 1 x 1 domain.

cantilever: four 0.3 x 0.3 corner supports on the x = 0 face (all DOFs
fixed), unit downward load spread over a radius-0.1 disk centered on the
opposite face.

mbb: x-symmetry on the x = 0 face, z-support on a one-element-wide bottom
strip at x = 2, unit downward load on a radius-0.1 semicircle centered at
(0, 0.5, 1) on the top face.
"""

import numpy as np

from .mesh import (
    ConfigError,
    RegionSelector,
    StructuredHexMesh,
    select_nodes,
    selector_dof_indices,
)
from .simp import BoundaryConditions

DOMAIN = (2.0, 1.0, 1.0)
BENCHMARK_IDS = ("cantilever", "mbb")


def build_mesh(resolution):
    nx, ny, nz = resolution
    if nx < 1 or ny < 1 or nz < 1:
        raise ConfigError("resolution must be positive")
    h = DOMAIN[0] / nx
    if abs(ny * h - DOMAIN[1]) > 1e-12 or abs(nz * h - DOMAIN[2]) > 1e-12:
        raise ConfigError("resolution must give uniform h on the 2 x 1 x 1 domain (nx = 2 ny = 2 nz)")
    return StructuredHexMesh(nx, ny, nz, h)


def _distributed_load(mesh, nodes, force):
    """Equal nodal shares preserving the total force."""
    F = np.zeros(mesh.num_dofs)
    if len(nodes) == 0:
        raise ConfigError("empty load region")
    share = np.asarray(force, dtype=float) / len(nodes)
    for ax in range(3):
        F[3 * np.asarray(nodes) + ax] = share[ax]
    return F


def build_benchmark(benchmark_id, resolution):
    """Return (mesh, BoundaryConditions) for a named benchmark."""
    mesh = build_mesh(resolution)
    h = mesh.h
    Lx, Ly, Lz = DOMAIN

    if benchmark_id == "cantilever":
        fixed = []
        for cy in (0.15, Ly - 0.15):
            for cz in (0.15, Lz - 0.15):
                sel = RegionSelector(
                    kind="strip-on-face", face="x0",
                    center=(0.0, cy, cz), extents=(0.0, 0.3, 0.3),
                )
                fixed.append(selector_dof_indices(select_nodes(mesh, sel)))
        fixed_dofs = np.unique(np.concatenate(fixed))
        load_sel = RegionSelector(
            kind="disk-on-face", face="x1", center=(Lx, 0.5, 0.5), radius=0.1,
        )
        load_nodes = select_nodes(mesh, load_sel)
        F = _distributed_load(mesh, load_nodes, (0.0, 0.0, -1.0))
        return mesh, BoundaryConditions(fixed_dofs=fixed_dofs, loads=F,
                                        load_nodes=load_nodes)

    if benchmark_id == "mbb":
        sym = select_nodes(mesh, RegionSelector(kind="face", face="x0"))
        sym_dofs = selector_dof_indices(sym, dofs=("x",))
        strip = RegionSelector(
            kind="strip-on-face", face="z0",
            center=(Lx - h / 2.0, Ly / 2.0, 0.0), extents=(h, Ly, 0.0),
        )
        strip_dofs = selector_dof_indices(select_nodes(mesh, strip), dofs=("z",))
        fixed_dofs = np.unique(np.concatenate([sym_dofs, strip_dofs]))
        load_sel = RegionSelector(
            kind="disk-on-face", face="z1", center=(0.0, 0.5, Lz), radius=0.1,
        )
        load_nodes = select_nodes(mesh, load_sel)
        F = _distributed_load(mesh, load_nodes, (0.0, 0.0, -1.0))
        return mesh, BoundaryConditions(fixed_dofs=fixed_dofs, loads=F,
                                        load_nodes=load_nodes)

    raise ConfigError(f"unknown benchmark id {benchmark_id!r}")
