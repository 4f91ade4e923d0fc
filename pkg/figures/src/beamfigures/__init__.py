"""Plots for the beam simulator's CSV outputs.

These scripts never recompute physics: the trajectory and diagnostics CSV
files are the single source of truth, and everything here is a rendering
of their columns.
"""

__version__ = "0.1.0"
