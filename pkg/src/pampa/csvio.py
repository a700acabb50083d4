"""Plain-text solution files: one row per DoF, 17 significant digits."""
from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import BoundaryCondition, DoFField, Grid1D


def _rows(field: DoFField, grid: Grid1D, bc: BoundaryCondition):
    avg = field.averages.reshape(field.n_cells, -1)
    pts = field.points.reshape(field.n_nodes, -1)
    for x, row in zip(grid.centers(), avg):
        yield x, "avg", row
    for x, row in zip(grid.point_coordinates(bc), pts):
        yield x, "pt", row


def format_solution(field: DoFField, grid: Grid1D, bc: BoundaryCondition) -> str:
    k = field.n_components
    lines = [",".join(["x", "kind"] + [f"comp{i}" for i in range(k)])]
    for x, kind, row in _rows(field, grid, bc):
        lines.append(",".join([format(float(x), ".17g"), kind] + [format(float(v), ".17g") for v in row]))
    return "\n".join(lines) + "\n"


def write_solution_csv(path, field: DoFField, grid: Grid1D, bc: BoundaryCondition) -> Path:
    """Write atomically: a temporary file in the target directory is renamed into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(format_solution(field, grid, bc))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_solution_csv(path):
    """Return (field, x_averages, x_points)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["x", "kind"] or len(header) not in (3, 5):
            raise ConfigurationError(f"{path}: not a solution file (header {header})")
        xs = {"avg": [], "pt": []}
        vals = {"avg": [], "pt": []}
        for row in reader:
            if not row:
                continue
            if row[1] not in xs or len(row) != len(header):
                raise ConfigurationError(f"{path}: malformed row {row}")
            xs[row[1]].append(float(row[0]))
            vals[row[1]].append([float(v) for v in row[2:]])
    avg = np.array(vals["avg"], dtype=float)
    pts = np.array(vals["pt"], dtype=float)
    if len(header) == 3:
        avg, pts = avg[:, 0], pts[:, 0]
    return DoFField(avg, pts), np.array(xs["avg"]), np.array(xs["pt"])
