"""Bit-stable file formats: CSV with 17 significant digits (round-trip
exact for 64-bit floats), LF line endings, atomic writes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .fokker_planck import DensityGrid
from .montecarlo import Snapshot, Trajectory

TRAJECTORY_COLUMNS = ["t", "S", "Y", "E", "acc_op", "acc_pr"]


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory plus rename, so an
    interrupted run never leaves a truncated file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _read_csv(path, expected_header: list[str]) -> np.ndarray:
    with open(path, newline="\n") as fh:
        header = fh.readline().strip().split(",")
        if header != expected_header:
            raise ValueError(f"{path}: expected columns {expected_header}, got {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data


def write_trajectory_csv(path, traj: Trajectory) -> None:
    rows = zip(traj.t, traj.S, traj.Y, traj.E, traj.acc_op, traj.acc_pr)
    atomic_write(path, _csv(TRAJECTORY_COLUMNS, rows))


def read_trajectory_csv(path) -> Trajectory:
    d = _read_csv(path, TRAJECTORY_COLUMNS)
    return Trajectory(t=d[:, 0], S=d[:, 1], Y=d[:, 2], E=d[:, 3],
                      acc_op=d[:, 4], acc_pr=d[:, 5])


def write_histogram_csv(path, edges, density) -> None:
    rows = zip(edges[:-1], edges[1:], density)
    atomic_write(path, _csv(["bin_left", "bin_right", "density"], rows))


def read_histogram_csv(path):
    d = _read_csv(path, ["bin_left", "bin_right", "density"])
    edges = np.append(d[:, 0], d[-1, 1])
    return edges, d[:, 2]


def write_grid_csv(path, grid: DensityGrid) -> None:
    rows = zip(grid.edges[:-1], grid.edges[1:], grid.values)
    atomic_write(path, _csv(["edge_left", "edge_right", "value"], rows))


def read_grid_csv(path, kind: str = "price") -> DensityGrid:
    d = _read_csv(path, ["edge_left", "edge_right", "value"])
    edges = np.append(d[:, 0], d[-1, 1])
    return DensityGrid(edges, d[:, 2], kind)


def write_samples_csv(path, values) -> None:
    atomic_write(path, _csv(["value"], ((v,) for v in values)))


def read_samples_csv(path) -> np.ndarray:
    return _read_csv(path, ["value"])[:, 0]


def write_report(path, entries: dict) -> None:
    """Key-value report, one `key = value` per line."""
    lines = []
    for key, val in entries.items():
        if isinstance(val, float):
            val = fmt(val)
        lines.append(f"{key} = {val}")
    atomic_write(path, "\n".join(lines) + "\n")


def read_report(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def write_snapshots(outdir, snapshots: list[Snapshot]) -> None:
    outdir = Path(outdir)
    for idx, snap in enumerate(snapshots):
        write_histogram_csv(outdir / f"snapshot_y_{idx:04d}.csv",
                            snap.y_edges, snap.y_density)
        write_histogram_csv(outdir / f"snapshot_s_{idx:04d}.csv",
                            snap.s_edges, snap.s_density)
