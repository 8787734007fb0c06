"""Deterministic batch plotting for consensus-clock output files."""

from .jobs import KINDS, FigureJob, SchemaMismatch, crossing, load_summaries, load_tail, render

__version__ = "0.1.0"

__all__ = ["KINDS", "FigureJob", "SchemaMismatch", "crossing",
           "load_summaries", "load_tail", "render"]
