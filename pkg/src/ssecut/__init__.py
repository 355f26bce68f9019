"""Desk-scale sparsest cut laboratory.

Rounding algorithms for sparsest cut under local-expansion assumptions
(column-selection rounding, orthogonal separators, padded decompositions,
small-set expander flows), each checkable against exact brute-force oracles
on small graphs.
"""

from .graph_core import CutResult, Graph, cut_quality, cut_weight, laplacian, normalize_regular

__all__ = ["CutResult", "Graph", "cut_quality", "cut_weight", "laplacian", "normalize_regular"]
__version__ = "0.1.0"
