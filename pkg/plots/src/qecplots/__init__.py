"""Batch figure rendering for simulation sweep CSV/JSON outputs."""

from qecplots.render import PlotSpec, SchemaError, render

__all__ = ["PlotSpec", "SchemaError", "render"]
