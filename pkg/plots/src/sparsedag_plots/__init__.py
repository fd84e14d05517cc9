"""Rendering toolkit for sparsedag harness CSVs."""

from .render import (EmptyInput, FigureSpec, SchemaMismatch, render,
                     render_egress_table, render_inclusion_figure,
                     render_runs_figure)

__version__ = "0.1.0"
