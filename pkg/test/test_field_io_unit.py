import os

import numpy as np
import pandas as pd

from infra.field_io import field_frame, write_field_csv, write_table, write_vtk
from infra.fields import FieldP0, FieldP1
from infra.mesh import build_mesh


def test_field_frames():
    interval = build_mesh([0.0, 1.0], 0.5)
    assert list(field_frame(FieldP0(interval, [1.0, 2.0])).columns) == ["x", "value"]
    assert field_frame(FieldP0(interval, [1.0, 2.0]))["x"].tolist() == [0.25, 0.75]
    square = build_mesh([[0.0, 1.0], [0.0, 1.0]], 1.0)
    frame = field_frame(FieldP1(square, [0.0, 1.0, 2.0, 3.0]))
    assert list(frame.columns) == ["x", "y", "value"]
    assert len(frame) == 4


def test_csv_keeps_full_precision(tmp_path):
    mesh = build_mesh([0.0, 1.0], 1.0 / 3.0)
    field = FieldP0(mesh, [1.0 / 3.0, 2.0 / 3.0, np.pi])
    path = write_field_csv(field, str(tmp_path / "nested" / "u.csv"))
    loaded = pd.read_csv(path, float_precision="round_trip")
    assert loaded["value"].tolist() == field.values.tolist()
    write_table(pd.DataFrame({"a": [0.1]}), str(tmp_path / "t.csv"))
    assert open(tmp_path / "t.csv").read() == "a\n0.10000000000000001\n"


def test_vtk_layout(tmp_path):
    mesh = build_mesh([[0.0, 1.0], [0.0, 1.0]], 0.5)
    path = write_vtk(
        str(tmp_path / "snap.vtk"),
        mesh,
        point_data={"w": np.zeros(mesh.n_vertices)},
        cell_data={"u": np.ones(mesh.n_cells)},
    )
    assert os.path.exists(path)
    lines = open(path).read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert f"POINTS {mesh.n_vertices} double" in lines
    assert f"CELLS {mesh.n_cells} {mesh.n_cells * 4}" in lines
    assert lines.count("5") == mesh.n_cells
    assert f"POINT_DATA {mesh.n_vertices}" in lines
    assert f"CELL_DATA {mesh.n_cells}" in lines
    assert "SCALARS u double 1" in lines
