"""Numerical laboratory for the hyperbolic mean curvature flow X_tt = H n."""
from hmcf.stencils import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
