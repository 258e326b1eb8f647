"""Structured hexahedral mesh with implicit connectivity and region selection.

Node and element indices are lexicographic with i (x) fastest, then j (y),
then k (z). Element vertex order matches the marching-cubes convention:
v0..v3 counterclockwise on the bottom face starting at the cell origin,
v4..v7 directly above.
"""

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid mesh or region-selector configuration."""


FACE_IDS = ("x0", "x1", "y0", "y1", "z0", "z1")


@dataclass(frozen=True)
class StructuredHexMesh:
    nx: int
    ny: int
    nz: int
    h: float
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or self.nz < 1:
            raise ConfigError("element counts must be >= 1")
        if self.h <= 0:
            raise ConfigError("element edge length must be positive")

    @property
    def num_nodes(self):
        return (self.nx + 1) * (self.ny + 1) * (self.nz + 1)

    @property
    def num_elements(self):
        return self.nx * self.ny * self.nz

    @property
    def num_dofs(self):
        return 3 * self.num_nodes

    @property
    def element_volume(self):
        return self.h ** 3

    @property
    def domain_volume(self):
        return self.num_elements * self.element_volume

    @property
    def lengths(self):
        return (self.nx * self.h, self.ny * self.h, self.nz * self.h)

    # ---- index arithmetic -------------------------------------------------

    def node_index(self, i, j, k):
        return i + (self.nx + 1) * (j + (self.ny + 1) * k)

    def node_ijk(self, index):
        nxp, nyp = self.nx + 1, self.ny + 1
        i = index % nxp
        j = (index // nxp) % nyp
        k = index // (nxp * nyp)
        return i, j, k

    def element_index(self, i, j, k):
        return i + self.nx * (j + self.ny * k)

    def element_ijk(self, index):
        i = index % self.nx
        j = (index // self.nx) % self.ny
        k = index // (self.nx * self.ny)
        return i, j, k

    def node_coords(self, index):
        if np.any(np.asarray(index) < 0) or np.any(np.asarray(index) >= self.num_nodes):
            raise IndexError("node index out of range")
        i, j, k = self.node_ijk(np.asarray(index))
        return np.asarray(self.origin) + self.h * np.stack(
            [np.asarray(i), np.asarray(j), np.asarray(k)], axis=-1
        ).astype(float)

    def element_nodes(self, index):
        """Return the 8 node indices of an element in marching-cubes order."""
        if np.any(np.asarray(index) < 0) or np.any(np.asarray(index) >= self.num_elements):
            raise IndexError("element index out of range")
        i, j, k = self.element_ijk(index)
        n = self.node_index
        return np.array(
            [
                n(i, j, k),
                n(i + 1, j, k),
                n(i + 1, j + 1, k),
                n(i, j + 1, k),
                n(i, j, k + 1),
                n(i + 1, j, k + 1),
                n(i + 1, j + 1, k + 1),
                n(i, j + 1, k + 1),
            ]
        )

    # ---- bulk tables (cached) ---------------------------------------------

    _cache: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    def all_node_coords(self):
        """(num_nodes, 3) array of node coordinates."""
        if "coords" not in self._cache:
            i = np.arange(self.nx + 1)
            j = np.arange(self.ny + 1)
            k = np.arange(self.nz + 1)
            K, J, I = np.meshgrid(k, j, i, indexing="ij")
            coords = np.asarray(self.origin) + self.h * np.stack(
                [I.ravel(), J.ravel(), K.ravel()], axis=1
            ).astype(float)
            self._cache["coords"] = coords
        return self._cache["coords"]

    def element_node_table(self):
        """(num_elements, 8) connectivity table in marching-cubes vertex order."""
        if "enodes" not in self._cache:
            ei = np.arange(self.num_elements)
            i, j, k = self.element_ijk(ei)
            n = self.node_index
            tab = np.stack(
                [
                    n(i, j, k),
                    n(i + 1, j, k),
                    n(i + 1, j + 1, k),
                    n(i, j + 1, k),
                    n(i, j, k + 1),
                    n(i + 1, j, k + 1),
                    n(i + 1, j + 1, k + 1),
                    n(i, j + 1, k + 1),
                ],
                axis=1,
            )
            self._cache["enodes"] = tab
        return self._cache["enodes"]

    def element_centroids(self):
        if "centroids" not in self._cache:
            ei = np.arange(self.num_elements)
            i, j, k = self.element_ijk(ei)
            c = np.asarray(self.origin) + self.h * (
                np.stack([i, j, k], axis=1).astype(float) + 0.5
            )
            self._cache["centroids"] = c
        return self._cache["centroids"]

    def node_elements(self):
        """List of incident element index arrays, one per node."""
        if "nelems" not in self._cache:
            tab = self.element_node_table()
            order = np.argsort(tab.ravel(), kind="stable")
            elems = np.repeat(np.arange(self.num_elements), 8)[order]
            counts = np.bincount(tab.ravel(), minlength=self.num_nodes)
            splits = np.cumsum(counts)[:-1]
            self._cache["nelems"] = np.split(elems, splits)
        return self._cache["nelems"]


@dataclass(frozen=True)
class RegionSelector:
    """Geometric node-selection predicate on the mesh boundary or interior.

    kinds:
      face          -- all nodes on the given domain face
      box           -- nodes within an axis-aligned box (center, extents)
      disk-on-face  -- nodes on a face within in-plane radius of center
      strip-on-face -- nodes on a face within the in-plane box (center, extents)

    dofs selects which displacement components the region constrains.
    """

    kind: str
    face: str = ""
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0
    extents: tuple = (0.0, 0.0, 0.0)
    dofs: tuple = ("x", "y", "z")


def _face_axis_value(mesh, face):
    if face not in FACE_IDS:
        raise ConfigError(f"unknown face id {face!r}; expected one of {FACE_IDS}")
    axis = "xyz".index(face[0])
    value = mesh.origin[axis] + (mesh.lengths[axis] if face[1] == "1" else 0.0)
    return axis, value


def select_nodes(mesh, selector):
    """Return the sorted array of node indices selected by the predicate.

    All comparisons use tolerance 1e-9 * h so selection is deterministic for
    nodes lying exactly on region boundaries.
    """
    tol = 1e-9 * mesh.h
    coords = mesh.all_node_coords()

    if selector.kind == "box":
        c = np.asarray(selector.center)
        ext = np.asarray(selector.extents)
        mask = np.all(np.abs(coords - c) <= ext / 2.0 + tol, axis=1)
        return np.flatnonzero(mask)

    axis, value = _face_axis_value(mesh, selector.face)
    on_face = np.abs(coords[:, axis] - value) <= tol
    if selector.kind == "face":
        return np.flatnonzero(on_face)

    inplane = [a for a in range(3) if a != axis]
    if selector.kind == "disk-on-face":
        c = np.asarray(selector.center)
        d2 = np.sum((coords[:, inplane] - c[inplane]) ** 2, axis=1)
        return np.flatnonzero(on_face & (d2 <= (selector.radius + tol) ** 2))
    if selector.kind == "strip-on-face":
        c = np.asarray(selector.center)
        ext = np.asarray(selector.extents)
        mask = on_face
        for a in inplane:
            mask = mask & (np.abs(coords[:, a] - c[a]) <= ext[a] / 2.0 + tol)
        return np.flatnonzero(mask)
    raise ConfigError(f"unknown selector kind {selector.kind!r}")


def selector_dof_indices(nodes, dofs=("x", "y", "z")):
    """Expand node indices to global DOF indices for the given components."""
    comps = np.array([{"x": 0, "y": 1, "z": 2}[d] for d in dofs])
    return (3 * np.asarray(nodes)[:, None] + comps[None, :]).ravel()
