"""Legacy ASCII VTK export of triangulations and nodal fields."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Mesh


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_vtk(path, mesh: Mesh, point_data: dict | None = None,
              cell_data: dict | None = None, title: str = "homogflow mesh") -> None:
    """Write an unstructured triangle grid with optional scalar arrays.

    Duplicated interface nodes are written as coincident points, so
    point arrays can carry both traces of a jumping field.
    """
    lines = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in mesh.nodes:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)

    cell_data = dict(cell_data or {})
    cell_data.setdefault("subdomain", mesh.tri_tags)
    lines.append(f"CELL_DATA {mesh.n_triangles}")
    for name, arr in cell_data.items():
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            lines.append(f"SCALARS {name} int 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(str(int(v)) for v in arr)
        else:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(float(v)) for v in arr)

    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, arr in point_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(float(v)) for v in np.asarray(arr))

    Path(path).write_text("\n".join(lines) + "\n")
