"""Passive figure generation from ssmt exports: decorated-tree renderings,
level-set overlays, spine profiles, convergence diagnostics and report
tables.  Figures are pure views of exported numbers."""

from .render import render
from .spec import KINDS, FigureSpec, SchemaError

__version__ = "0.1.0"
