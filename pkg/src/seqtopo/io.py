"""Legacy-ASCII VTK, ASCII STL, and CSV writers."""

import numpy as np


class IOError_(IOError):
    pass


def write_vtk(path, mesh, point_data=None, cell_data=None, title="seqtopo fields"):
    """Legacy ASCII STRUCTURED_POINTS file with named point and cell fields."""
    point_data = point_data or {}
    cell_data = cell_data or {}
    for name, arr in point_data.items():
        if len(arr) != mesh.num_nodes:
            raise IOError_(f"point field {name!r} length mismatch for {path}")
    for name, arr in cell_data.items():
        if len(arr) != mesh.num_elements:
            raise IOError_(f"cell field {name!r} length mismatch for {path}")
    try:
        with open(path, "w") as f:
            f.write("# vtk DataFile Version 3.0\n")
            f.write(f"{title}\n")
            f.write("ASCII\n")
            f.write("DATASET STRUCTURED_POINTS\n")
            f.write(f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} {mesh.nz + 1}\n")
            ox, oy, oz = mesh.origin
            f.write(f"ORIGIN {ox} {oy} {oz}\n")
            f.write(f"SPACING {mesh.h} {mesh.h} {mesh.h}\n")
            if point_data:
                f.write(f"POINT_DATA {mesh.num_nodes}\n")
                for name, arr in point_data.items():
                    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(f, np.asarray(arr, dtype=float), fmt="%.10g")
            if cell_data:
                f.write(f"CELL_DATA {mesh.num_elements}\n")
                for name, arr in cell_data.items():
                    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(f, np.asarray(arr, dtype=float), fmt="%.10g")
    except OSError as exc:
        raise IOError_(f"failed writing VTK file {path}: {exc}") from exc


def write_stl(path, surface, name="seqtopo"):
    """ASCII STL with facet normals recomputed from the vertex winding."""
    normals, _ = surface.normals_and_areas()
    corners = surface.corners()
    try:
        with open(path, "w") as f:
            f.write(f"solid {name}\n")
            for n, tri in zip(normals, corners):
                f.write(f"  facet normal {n[0]:.10g} {n[1]:.10g} {n[2]:.10g}\n")
                f.write("    outer loop\n")
                for v in tri:
                    f.write(f"      vertex {v[0]:.10g} {v[1]:.10g} {v[2]:.10g}\n")
                f.write("    endloop\n")
                f.write("  endfacet\n")
            f.write(f"endsolid {name}\n")
    except OSError as exc:
        raise IOError_(f"failed writing STL file {path}: {exc}") from exc


def read_stl_facet_count(path):
    with open(path) as f:
        return sum(1 for line in f if line.lstrip().startswith("facet normal"))


def read_vtk_dimensions(path):
    with open(path) as f:
        for line in f:
            if line.startswith("DIMENSIONS"):
                return tuple(int(v) for v in line.split()[1:4])
    raise IOError_(f"no DIMENSIONS line in {path}")
