"""Simulation lab for randomized distributed (deg+1)-list-coloring."""

from .graph import D1lcInstance, Graph, ListInstance, load_instance, parse_instance, save_instance

__all__ = ["D1lcInstance", "Graph", "ListInstance", "load_instance", "parse_instance", "save_instance"]

__version__ = "0.1.0"
