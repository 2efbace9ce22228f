"""Domatic partitions of finite, lazy and profinite Schreier graphs."""

from ._backend import BACKEND
from .graph import (Coloring, DomaticReport, Graph, GraphError, find_domatic_coloring, greedy_domatic,
                    max_domatic_number, verify_domatic)
from .hypercube import hypercube_graph, nonexistence_certificate, power_of_two_domatic
from .profinite import ClopenSet, GroupSpec, Point

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ClopenSet", "Coloring", "DomaticReport", "Graph", "GraphError", "GroupSpec", "Point",
    "find_domatic_coloring", "greedy_domatic", "hypercube_graph", "max_domatic_number",
    "nonexistence_certificate", "power_of_two_domatic", "verify_domatic", "__version__",
]
