"""Geometry transfer: elemental densities -> nodal field -> iso-surface
triangles -> signed distance field on the original mesh nodes.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mc_tables import EDGE_TABLE, TRI_TABLE, EDGE_VERTS

log = logging.getLogger(__name__)


class GeometryError(ValueError):
    pass


# ---- nodal density mapping ------------------------------------------------


def map_densities_to_nodes(mesh, rho):
    """Map elemental densities to nodes by a local linear least-squares fit.

    Nodes with at least 4 incident elements get the fitted linear polynomial
    evaluated at the node; rank-deficient fits and nodes with 2-3 neighbors
    fall back to inverse-distance weighting of incident centroids; single
    neighbors are copied. Results are clamped to [0, 1].
    """
    rho = np.asarray(rho, dtype=float)
    coords = mesh.all_node_coords()
    centroids = mesh.element_centroids()
    incident = mesh.node_elements()
    out = np.empty(mesh.num_nodes)
    for n, elems in enumerate(incident):
        xs = centroids[elems]
        vals = rho[elems]
        m = len(elems)
        if m == 1:
            out[n] = vals[0]
            continue
        if m >= 4:
            X = np.hstack([np.ones((m, 1)), xs])
            A = X.T @ X
            try:
                L = np.linalg.cholesky(A)
                pivots = np.diag(L) ** 2
                if pivots.min() >= 1e-10 * np.trace(A):
                    a = np.linalg.solve(A, X.T @ vals)
                    out[n] = a[0] + a[1:] @ coords[n]
                    continue
            except np.linalg.LinAlgError:
                pass
        d = np.linalg.norm(xs - coords[n], axis=1)
        wts = 1.0 / np.maximum(d, 1e-300)
        out[n] = wts @ vals / wts.sum()
    return np.clip(out, 0.0, 1.0)


# ---- triangle surface -----------------------------------------------------


@dataclass
class TriangleSurface:
    vertices: np.ndarray  # (nv, 3)
    triangles: np.ndarray  # (nt, 3) vertex indices

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def corners(self):
        """(nt, 3, 3) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    def normals_and_areas(self):
        q = self.corners()
        cross = np.cross(q[:, 1] - q[:, 0], q[:, 2] - q[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = cross / np.linalg.norm(cross, axis=1, keepdims=True)
        return np.nan_to_num(normals), areas

    def centroids(self):
        return self.corners().mean(axis=1)

    def aabbs(self):
        """(nt, 2, 3) min/max corners per triangle."""
        q = self.corners()
        return np.stack([q.min(axis=1), q.max(axis=1)], axis=1)

    def circumradius_bound(self):
        """Max distance from a triangle centroid to its vertices."""
        q = self.corners()
        c = q.mean(axis=1, keepdims=True)
        return float(np.linalg.norm(q - c, axis=2).max()) if len(q) else 0.0


def extract_isosurface(mesh, nodal, iso):
    """Marching-cubes triangulation of the nodal field at the iso value.

    Edge vertices are placed by linear interpolation and welded across cells
    (lattice-edge key, then quantized-coordinate pass). Triangles are oriented
    with normals pointing from solid (value >= iso) toward void; degenerate
    triangles are filtered out.
    """
    nodal = np.asarray(nodal, dtype=float)
    if not np.all(np.isfinite(nodal)):
        raise GeometryError("nodal field must be finite")
    enodes = mesh.element_node_table()
    vals = nodal[enodes]  # (ne, 8)

    # cube index: bit set where the corner is below the iso value
    below = vals < iso
    cube_idx = np.zeros(len(vals), dtype=np.int64)
    for b in range(8):
        cube_idx |= below[:, b].astype(np.int64) << b
    active = np.flatnonzero(EDGE_TABLE[cube_idx] != 0)
    if active.size == 0:
        return TriangleSurface(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))

    coords = mesh.all_node_coords()
    vert_map = {}  # (node_lo, node_hi) -> vertex id
    verts = []
    tris = []
    for e in active:
        cell_nodes = enodes[e]
        cell_vals = vals[e]
        edge_vid = {}
        emask = EDGE_TABLE[cube_idx[e]]
        for edge in range(12):
            if not (emask >> edge) & 1:
                continue
            a, b = EDGE_VERTS[edge]
            na, nb = int(cell_nodes[a]), int(cell_nodes[b])
            key = (na, nb) if na < nb else (nb, na)
            vid = vert_map.get(key)
            if vid is None:
                va, vb = cell_vals[a], cell_vals[b]
                t = 0.5 if vb == va else (iso - va) / (vb - va)
                t = min(max(t, 0.0), 1.0)
                p = coords[int(cell_nodes[a])] + (
                    coords[int(cell_nodes[b])] - coords[int(cell_nodes[a])]
                ) * t
                vid = len(verts)
                verts.append(p)
                vert_map[key] = vid
            edge_vid[edge] = vid
        row = TRI_TABLE[cube_idx[e]]
        for s in range(0, 16, 3):
            if row[s] < 0:
                break
            tris.append((edge_vid[row[s]], edge_vid[row[s + 1]], edge_vid[row[s + 2]]))

    verts = np.array(verts)
    tris = np.array(tris, dtype=np.int64)

    # second weld pass: coincident coordinates (vertices landing on lattice nodes)
    quantum = 1e-9 * mesh.h
    keys = np.round(verts / quantum).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    verts = verts[first]
    tris = inverse[tris]

    surf = TriangleSurface(verts, tris)
    _, areas = surf.normals_and_areas()
    keep = areas >= 1e-12 * mesh.h ** 2
    dropped = int((~keep).sum())
    if dropped:
        log.info("dropped %d degenerate marching-cubes triangles", dropped)
    return TriangleSurface(verts, tris[keep])


# ---- point-to-triangle distance ------------------------------------------


def closest_point_on_triangle(point, q1, q2, q3):
    """Closed-form constrained minimizer; returns (closest point, squared
    distance). Region classification per the standard barycentric case
    analysis; degenerate triangles resolve to edge/vertex cases."""
    p = np.asarray(point, dtype=float)
    a, b, c = (np.asarray(q, dtype=float) for q in (q1, q2, q3))
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        cp = a
    else:
        bp = p - b
        d3, d4 = ab @ bp, ac @ bp
        if d3 >= 0 and d4 <= d3:
            cp = b
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0 <= d1 and d3 <= 0:
                cp = a + (d1 / (d1 - d3)) * ab
            else:
                cp_pt = p - c
                d5, d6 = ab @ cp_pt, ac @ cp_pt
                if d6 >= 0 and d5 <= d6:
                    cp = c
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0 <= d2 and d6 <= 0:
                        cp = a + (d2 / (d2 - d6)) * ac
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
                            cp = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b)
                        else:
                            denom = va + vb + vc
                            v = vb / denom
                            w = vc / denom
                            cp = a + v * ab + w * ac
    diff = p - cp
    return cp, float(diff @ diff)


def _closest_sqdist_many(point, tri_corners):
    """Vectorized squared distances from one point to many triangles."""
    a = tri_corners[:, 0]
    ab = tri_corners[:, 1] - a
    ac = tri_corners[:, 2] - a
    ap = point - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = point - tri_corners[:, 1]
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cpv = point - tri_corners[:, 2]
    d5 = np.einsum("ij,ij->i", ab, cpv)
    d6 = np.einsum("ij,ij->i", ac, cpv)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    n = len(tri_corners)
    cp = np.empty((n, 3))
    done = np.zeros(n, dtype=bool)

    m = (d1 <= 0) & (d2 <= 0)
    cp[m] = a[m]
    done |= m
    m = ~done & (d3 >= 0) & (d4 <= d3)
    cp[m] = tri_corners[m, 1]
    done |= m
    m = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = d1 / (d1 - d3)
    cp[m] = a[m] + t[m, None] * ab[m]
    done |= m
    m = ~done & (d6 >= 0) & (d5 <= d6)
    cp[m] = tri_corners[m, 2]
    done |= m
    m = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = d2 / (d2 - d6)
    cp[m] = a[m] + t[m, None] * ac[m]
    done |= m
    m = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    cp[m] = tri_corners[m, 1] + t[m, None] * (tri_corners[m, 2] - tri_corners[m, 1])
    done |= m
    m = ~done
    denom = va + vb + vc
    with np.errstate(invalid="ignore", divide="ignore"):
        v = vb / denom
        w = vc / denom
    cp[m] = a[m] + v[m, None] * ab[m] + w[m, None] * ac[m]

    diff = point - cp
    return np.einsum("ij,ij->i", diff, diff)


# ---- signed distance field ------------------------------------------------


def unsigned_distances(mesh, surface, brute_force=False):
    """Per-node minimum distance to the triangle surface.

    The accelerated path gathers candidates from a k-d tree over triangle
    centroids with a provably conservative radius, applies an AABB lower-bound
    rejection, then evaluates exact projections; it returns the exact minimum
    over all triangles.
    """
    if surface.num_triangles == 0:
        raise GeometryError("cannot build a distance field from an empty surface")
    nodes = mesh.all_node_coords()
    corners = surface.corners()
    if brute_force:
        return np.sqrt(
            np.array([_closest_sqdist_many(p, corners).min() for p in nodes])
        )
    centroids = surface.centroids()
    r_max = surface.circumradius_bound()
    tree = cKDTree(centroids)
    d0, _ = tree.query(nodes)
    out = np.empty(len(nodes))
    aabbs = surface.aabbs()
    for n, p in enumerate(nodes):
        cand = tree.query_ball_point(p, d0[n] + 2.0 * r_max)
        cand = np.asarray(cand, dtype=np.int64)
        ub = d0[n] + r_max  # distance to the nearest centroid's triangle
        lo = np.maximum(aabbs[cand, 0] - p, 0.0)
        hi = np.maximum(p - aabbs[cand, 1], 0.0)
        aabb_dist2 = np.sum(np.maximum(lo, hi) ** 2, axis=1)
        cand = cand[aabb_dist2 <= ub * ub + 1e-300]
        out[n] = np.sqrt(_closest_sqdist_many(p, corners[cand]).min())
    return out


def build_sdf(mesh, surface, nodal_density, iso, brute_force=False):
    """Signed distance field on mesh nodes: negative where the nodal density
    is at or above the iso threshold (solid), positive otherwise."""
    d = unsigned_distances(mesh, surface, brute_force=brute_force)
    sign = np.where(np.asarray(nodal_density) >= iso, -1.0, 1.0)
    return sign * d
