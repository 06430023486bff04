"""Scattering resonances of quantum graphs with leads."""

from .graphcore import MetricGraph, catalog, compute_invariants, load_graph
from .resonancefinder import FinderConfig, SearchRegion, find_resonances, search
from .scattering import SecularFunction, build
from .secularpoly import symbolic_secular

__all__ = [
    "MetricGraph", "catalog", "compute_invariants", "load_graph",
    "FinderConfig", "SearchRegion", "find_resonances", "search",
    "SecularFunction", "build", "symbolic_secular",
]
