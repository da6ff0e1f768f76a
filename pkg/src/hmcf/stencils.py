"""Second-order finite differences on structured grids.

Two interchangeable backends implement the same kernels: a compiled Cython
module (``hmcf._stencils``) and the numpy code below.  The compiled one is used
when importable; set ``HMCF_PURE_PYTHON=1`` to force the fallback.

Periodic axes may carry a translation ``shift``: the field satisfies
``f(x + period) = f(x) + shift``.  This lets a cylinder or a flat band be
stored as one period of points while its positions keep growing along the
axis.  Non-periodic axes use one-sided second-order stencils on the two edge
rows.
"""
import os

import numpy as np

try:
    if os.environ.get("HMCF_PURE_PYTHON") == "1":
        raise ImportError("pure python backend requested")
    from hmcf import _stencils as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def _py_d1(f, out, h, periodic, shift):
    inv = 0.5 / h
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) * inv
    if periodic:
        out[:, 0] = (f[:, 1] - (f[:, -1] - shift)) * inv
        out[:, -1] = ((f[:, 0] + shift) - f[:, -2]) * inv
    else:
        out[:, 0] = (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) * inv
        out[:, -1] = (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) * inv


def _py_d2(f, out, h, periodic, shift):
    inv = 1.0 / (h * h)
    out[:, 1:-1] = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) * inv
    if periodic:
        out[:, 0] = (f[:, 1] - 2.0 * f[:, 0] + (f[:, -1] - shift)) * inv
        out[:, -1] = ((f[:, 0] + shift) - 2.0 * f[:, -1] + f[:, -2]) * inv
    else:
        out[:, 0] = (2.0 * f[:, 0] - 5.0 * f[:, 1] + 4.0 * f[:, 2] - f[:, 3]) * inv
        out[:, -1] = (2.0 * f[:, -1] - 5.0 * f[:, -2] + 4.0 * f[:, -3] - f[:, -4]) * inv


def _apply(kernel_name, f, axis, h, periodic, shift, backend):
    f = np.ascontiguousarray(f, dtype=np.float64)
    shape = f.shape
    pre = int(np.prod(shape[:axis], dtype=np.int64))
    post = int(np.prod(shape[axis + 1:], dtype=np.int64))
    f3 = f.reshape(pre, shape[axis], post)
    out = np.empty_like(f3)
    if shift is None:
        s = np.zeros(post)
    else:
        s = np.ascontiguousarray(np.broadcast_to(shift, shape[axis + 1:]), dtype=np.float64).ravel()
    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled stencil backend not available")
        getattr(_compiled, kernel_name + "_kernel")(f3, out, float(h), bool(periodic), s)
    else:
        (_py_d1 if kernel_name == "d1" else _py_d2)(f3, out, float(h), bool(periodic), s)
    return out.reshape(shape)


def diff1(f, axis, h, periodic=True, shift=None, backend=None):
    """Centered first derivative of ``f`` along grid ``axis``."""
    return _apply("d1", f, axis, h, periodic, shift, backend)


def diff2(f, axis, h, periodic=True, shift=None, backend=None):
    """Compact three-point second derivative of ``f`` along grid ``axis``."""
    return _apply("d2", f, axis, h, periodic, shift, backend)
