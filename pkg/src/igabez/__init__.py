"""Isogeometric analysis on single NURBS patches through Bezier extraction."""
from .extraction import build_topo_mesh, extract_patch
from .geometry import NurbsPatch, make_demo_domain, make_demo_domain_3d
from .kernels import BACKEND
from .splines import KnotVector, open_knot_vector

__version__ = "0.1.0"

__all__ = ["BACKEND", "KnotVector", "NurbsPatch", "build_topo_mesh", "extract_patch",
           "make_demo_domain", "make_demo_domain_3d", "open_knot_vector"]
