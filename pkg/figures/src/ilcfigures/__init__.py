"""Figure rendering for ilclab experiment output directories."""

from .figures import (
    FORMAT_CHOICES,
    WHICH_CHOICES,
    ExperimentTables,
    FigureSpec,
    load_tables,
    plot_costs,
    plot_outputs,
    render,
)

__all__ = [
    "FORMAT_CHOICES",
    "WHICH_CHOICES",
    "ExperimentTables",
    "FigureSpec",
    "load_tables",
    "plot_costs",
    "plot_outputs",
    "render",
]

__version__ = "0.1.0"
