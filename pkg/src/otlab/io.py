"""Point-cloud CSV interchange and the history CSV writer.

Point clouds: header ``x0,...,x{d-1}``, one row per point, ``.`` decimal,
LF line endings, full float64 round-trip precision.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError


def write_point_cloud(path, points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ContractError(f"point cloud must be 2-D, got shape {points.shape}")
    d = points.shape[1]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(f"x{i}" for i in range(d)) + "\n")
        for row in points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_point_cloud(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ContractError(f"{path}: empty point-cloud file")
    header = lines[0].split(",")
    d = len(header)
    if header != [f"x{i}" for i in range(d)]:
        raise ContractError(f"{path}: expected header x0,...,x{d - 1}, got {lines[0]!r}")
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != d:
            raise ContractError(f"{path}:{i}: expected {d} columns, got {len(cells)}")
        rows.append([float(c) for c in cells])
    if not rows:
        raise ContractError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_history_csv(path, history, config_line=None):
    """History rows as iter,level,loss_phi,loss_theta (metadata in a # line)."""
    with open(path, "w", newline="\n") as fh:
        if config_line is not None:
            fh.write(f"# {config_line}\n")
        fh.write("iter,level,loss_phi,loss_theta\n")
        for row in history.rows:
            fh.write(
                f"{row.iteration},{repr(row.level)},{repr(row.loss_phi)},{repr(row.loss_theta)}\n"
            )
