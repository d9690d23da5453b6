"""Multiplicity structure and deflation for isolated zeros of nonlinear systems."""

__version__ = "0.1.0"

from .breadth_one import BreadthError, breadth_one_multiplicity  # noqa: E402
from .deflation import (DeflationError, cluster_search, condition_number,  # noqa: E402
                        depth_deflate, gauss_newton)
from .dual_space import multiplicity_structure  # noqa: E402
from .expr import load_system, parse_system  # noqa: E402
from .jets import jet_truncate, taylor_table  # noqa: E402
from .macaulay import build_macaulay  # noqa: E402
from .numrank import numerical_kernel  # noqa: E402

__all__ = [
    "BreadthError", "DeflationError", "breadth_one_multiplicity", "build_macaulay",
    "cluster_search", "condition_number", "depth_deflate", "gauss_newton", "jet_truncate",
    "load_system", "multiplicity_structure", "numerical_kernel", "parse_system", "taylor_table",
]
