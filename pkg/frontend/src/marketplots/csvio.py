"""Readers for the simulator's file dialects.

Four file shapes appear in a run directory: trajectory CSVs
(t,S,Y,E,acc_op,acc_pr), histogram/grid CSVs (three columns of bin edges and
a density or value), sample CSVs (single `value` column), and key-value
reports (`key = value` lines). All are comma-separated with a header row and
LF endings. No simulator code is imported; the files are the contract.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["t", "S", "Y", "E", "acc_op", "acc_pr"]


class CsvFormatError(ValueError):
    """Raised with the offending file and line number."""

    def __init__(self, path, lineno: int | None, message: str):
        self.path = str(path)
        self.lineno = lineno
        where = f"{path}:{lineno}" if lineno is not None else str(path)
        super().__init__(f"{where}: {message}")


def _read_columns(path, expected: list[str]) -> np.ndarray:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise CsvFormatError(path, None, str(exc)) from exc
    if not lines:
        raise CsvFormatError(path, 1, "empty file")
    header = lines[0].split(",")
    missing = [c for c in expected if c not in header]
    if missing:
        raise CsvFormatError(path, 1, f"missing columns {missing}, found {header}")
    if header != expected:
        raise CsvFormatError(path, 1, f"expected columns {expected}, got {header}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(expected):
            raise CsvFormatError(path, lineno,
                                 f"expected {len(expected)} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise CsvFormatError(path, lineno, f"bad number: {exc}") from exc
    if not rows:
        raise CsvFormatError(path, 2, "no data rows")
    return np.asarray(rows)


def read_trajectory(path) -> dict[str, np.ndarray]:
    data = _read_columns(path, TRAJECTORY_COLUMNS)
    return {name: data[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}


def read_grid(path) -> tuple[np.ndarray, np.ndarray]:
    """Histogram or grid CSV; returns (edges, values)."""
    header = Path(path).read_text().split("\n", 1)[0].split(",")
    if header[:2] == ["bin_left", "bin_right"]:
        cols = ["bin_left", "bin_right", "density"]
    else:
        cols = ["edge_left", "edge_right", "value"]
    data = _read_columns(path, cols)
    lefts, rights, values = data[:, 0], data[:, 1], data[:, 2]
    if not np.allclose(lefts[1:], rights[:-1]):
        raise CsvFormatError(path, None, "bins are not contiguous")
    return np.append(lefts, rights[-1]), values


def read_samples(path) -> np.ndarray:
    return _read_columns(path, ["value"])[:, 0]


def read_report(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise CsvFormatError(path, lineno, "expected `key = value`")
        out[key.strip()] = val.strip()
    return out
