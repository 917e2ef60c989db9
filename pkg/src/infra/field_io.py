import logging
import os
from typing import Dict

import numpy as np
import pandas as pd

from infra.fields import Field, FieldP0
from infra.mesh import Mesh

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
_COORDINATE_NAMES = ("x", "y")


def write_table(frame: pd.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def field_frame(field: Field) -> pd.DataFrame:
    """
    :return: coordinates (cell centroids for P0, vertices for P1) and values
    """
    mesh = field.mesh
    points = mesh.centroids if isinstance(field, FieldP0) else mesh.vertices
    columns = {name: points[:, k] for k, name in enumerate(_COORDINATE_NAMES[: mesh.dim])}
    columns["value"] = field.values
    return pd.DataFrame(columns)


def write_field_csv(field: Field, path: str) -> str:
    return write_table(field_frame(field), path)


def write_vtk(
    path: str,
    mesh: Mesh,
    point_data: Dict[str, np.ndarray],
    cell_data: Dict[str, np.ndarray],
    title: str = "solver snapshot",
) -> str:
    """
    Legacy ASCII VTK unstructured grid with triangle (or line) cells
    """
    cell_type = 5 if mesh.dim == 2 else 3
    n_local = mesh.dim + 1
    points = np.zeros((mesh.n_vertices, 3))
    points[:, : mesh.dim] = mesh.vertices
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [" ".join(repr(float(c)) for c in p) for p in points]
    lines.append(f"CELLS {mesh.n_cells} {mesh.n_cells * (n_local + 1)}")
    lines += [f"{n_local} " + " ".join(str(int(v)) for v in cell) for cell in mesh.cells]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(cell_type)] * mesh.n_cells
    for header, count, data in (
        ("POINT_DATA", mesh.n_vertices, point_data),
        ("CELL_DATA", mesh.n_cells, cell_data),
    ):
        if not data:
            continue
        lines.append(f"{header} {count}")
        for name, values in data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines += [repr(float(v)) for v in values]
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path
