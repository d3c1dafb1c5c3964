"""Batch rendering of tdqmc CSV artifacts to PNG/SVG figures."""

from .csvio import SchemaError, read_map_csv, read_profile_csv
from .render import render_map, render_profile

__version__ = "0.1.0"

__all__ = ["SchemaError", "read_map_csv", "read_profile_csv",
           "render_map", "render_profile", "__version__"]
