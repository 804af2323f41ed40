"""Figure rendering for the market simulator's CSV outputs."""

from .csvio import CsvFormatError, read_grid, read_report, read_samples, read_trajectory
from .figures import FIGURE_KINDS, render

__all__ = [
    "CsvFormatError",
    "FIGURE_KINDS",
    "read_grid",
    "read_report",
    "read_samples",
    "read_trajectory",
    "render",
]

__version__ = "0.1.0"
