"""Minimal legacy-ASCII VTK writer for field snapshots on the background mesh."""

import numpy as np

from .geometry import CellKind

_CELL_TYPE = {CellKind.TRIANGLE: 5, CellKind.QUAD: 9}


def write_vtk(path, mesh, point_data=None, cell_data=None, title="cutstokes"):
    """Write the mesh and named scalar fields as a legacy unstructured grid.

    `point_data` maps names to (num_vertices,) arrays, `cell_data` to
    (num_elements,) arrays.
    """
    point_data = point_data or {}
    cell_data = cell_data or {}
    nv = len(mesh.vertices)
    ne = mesh.num_elements
    npts = mesh.elements.shape[1]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.12g} {y:.12g} 0\n")
        fh.write(f"CELLS {ne} {ne * (npts + 1)}\n")
        for elem in mesh.elements:
            fh.write(f"{npts} " + " ".join(str(int(v)) for v in elem) + "\n")
        fh.write(f"CELL_TYPES {ne}\n")
        ctype = _CELL_TYPE[mesh.cell_kind]
        for _ in range(ne):
            fh.write(f"{ctype}\n")
        if point_data:
            fh.write(f"POINT_DATA {nv}\n")
            for name, vals in point_data.items():
                _write_scalars(fh, name, vals, nv)
        if cell_data:
            fh.write(f"CELL_DATA {ne}\n")
            for name, vals in cell_data.items():
                _write_scalars(fh, name, vals, ne)


def _write_scalars(fh, name, vals, expected):
    vals = np.asarray(vals, float).ravel()
    if len(vals) != expected:
        raise ValueError(f"field {name!r} has {len(vals)} values, "
                         f"expected {expected}")
    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in vals:
        fh.write(f"{v:.12g}\n")


def vertex_values(layout_field, mesh, nodal):
    """Sample a nodal field array at the mesh vertices.

    Matches vertices to field nodes by snapped coordinates; vertices with
    no corresponding node (none on these layouts) get zero.
    """
    nodal = np.asarray(nodal, float)
    key = {}
    for i, (x, y) in enumerate(layout_field.coords):
        key[(round(x * 1e6), round(y * 1e6))] = i
    shape = (len(mesh.vertices),) + nodal.shape[1:]
    out = np.zeros(shape)
    for v, (x, y) in enumerate(mesh.vertices):
        i = key.get((round(x * 1e6), round(y * 1e6)))
        if i is not None:
            out[v] = nodal[i]
    return out
