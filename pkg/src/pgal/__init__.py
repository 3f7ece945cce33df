"""Perturbation-driven graph active learning on bipartite belief graphs."""

__version__ = "0.1.0"
