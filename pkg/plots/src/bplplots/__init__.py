"""Figure rendering for bpl CSV artifacts."""

__version__ = "0.1.0"

from .render import PLOT_KINDS, PlotSpec, SchemaError, read_rows, render

__all__ = ["PLOT_KINDS", "PlotSpec", "SchemaError", "read_rows", "render"]
