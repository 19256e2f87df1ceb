"""Spectral and scattering computations for Sturm-Liouville operators on noncompact A-graphs."""
from .errors import NumericalError, ParseError, PoleError, QGraphError, StructuralError
from .fileformat import emit_graph, load_graph, parse_graph_file
from .graph import MetricGraph, Potential, compute_orders, enumerate_cycles, validate_a_graph
from .local import SpectralPoint

__version__ = "0.1.0"

__all__ = [
    "MetricGraph", "Potential", "SpectralPoint", "parse_graph_file", "emit_graph", "load_graph",
    "validate_a_graph", "enumerate_cycles", "compute_orders",
    "QGraphError", "StructuralError", "ParseError", "NumericalError", "PoleError",
]
