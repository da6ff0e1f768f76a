"""Discrete differential geometry of hypersurfaces on structured grids.

An :class:`Immersion` stores one time level of positions ``X`` sampled on a
uniform grid in parameter space.  :func:`build_cache` turns it into a
:class:`GeometryCache` holding the induced metric, Christoffel symbols,
second fundamental form, inner unit normal, mean curvature and the curvature
contractions used by the evolution identities.

Array layout: a field over a grid of shape ``S`` with ``n`` parameter
directions in ``R^(n+1)`` is stored with the grid axes first, e.g. points are
``S + (n+1,)``, the metric is ``S + (n, n)`` and the Christoffel symbols are
``S + (n, n, n)`` indexed ``[k, i, j]`` for ``Gamma^k_ij``.
"""
from dataclasses import dataclass, field

import numpy as np

from hmcf import stencils
from hmcf.errors import DegenerateFrame, MetricDegenerate, NonFiniteField

DET_FLOOR = 1e-10
MIN_POINTS = 8


@dataclass(frozen=True, eq=False)
class Immersion:
    """Positions of an immersed curve (n=1) or surface (n=2) on a grid.

    ``shift[i]`` is the translation picked up by ``X`` across one period of
    parameter axis ``i`` (zero for closed directions).  ``pad[i]`` counts the
    ghost rows at each end of a non-periodic axis; they carry boundary data
    and are excluded from norms.
    """

    points: np.ndarray
    spacing: tuple
    periodic: tuple = None
    shift: np.ndarray = None
    pad: tuple = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        n = len(self.spacing)
        if n not in (1, 2):
            raise ValueError(f"dim_domain must be 1 or 2, got {n}")
        if pts.ndim != n + 1 or pts.shape[-1] != n + 1:
            raise ValueError(f"points must have shape grid + ({n + 1},), got {pts.shape}")
        if any(s < MIN_POINTS for s in pts.shape[:-1]):
            raise ValueError(f"every grid axis needs >= {MIN_POINTS} points, got {pts.shape[:-1]}")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteField("immersion has non-finite coordinates")
        periodic = tuple(bool(p) for p in (self.periodic or (True,) * n))
        shift = np.zeros((n, n + 1)) if self.shift is None else np.asarray(self.shift, dtype=np.float64)
        pad = tuple(int(p) for p in (self.pad or (0,) * n))
        if shift.shape != (n, n + 1) or len(periodic) != n or len(pad) != n:
            raise ValueError("periodic/shift/pad do not match the domain dimension")
        if any(p > 0 and per for p, per in zip(pad, periodic)):
            raise ValueError("ghost padding only applies to non-periodic axes")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "pad", pad)

    @property
    def dim_domain(self):
        return len(self.spacing)

    @property
    def grid_shape(self):
        return self.points.shape[:-1]

    @property
    def interior(self):
        """Index tuple selecting the non-ghost grid points."""
        return tuple(slice(p, s - p) for p, s in zip(self.pad, self.grid_shape))

    def with_points(self, points):
        return Immersion(points, self.spacing, self.periodic, self.shift, self.pad)

    def d1(self, f, axis, shift=None):
        return stencils.diff1(f, axis, self.spacing[axis], self.periodic[axis], shift)

    def d2(self, f, axis, shift=None):
        return stencils.diff2(f, axis, self.spacing[axis], self.periodic[axis], shift)

    def gradient(self, f, shift=None):
        """Stack of partial derivatives, shape ``grid + (n,) + f.shape[grid:]``."""
        n = self.dim_domain
        parts = [self.d1(f, i, None if shift is None else shift[i]) for i in range(n)]
        return np.stack(parts, axis=n)

    def hessian(self, f, shift=None):
        """Coordinate second derivatives; compact stencil on the diagonal."""
        n = self.dim_domain
        tail = f.shape[n:]
        out = np.empty(self.grid_shape + (n, n) + tail)
        for i in range(n):
            s = None if shift is None else shift[i]
            out[(slice(None),) * n + (i, i)] = self.d2(f, i, s)
            for j in range(i + 1, n):
                mixed = self.d1(self.d1(f, i, s), j)
                out[(slice(None),) * n + (i, j)] = mixed
                out[(slice(None),) * n + (j, i)] = mixed
        return out


@dataclass(frozen=True, eq=False)
class GeometryCache:
    immersion: Immersion
    tangents: np.ndarray
    second_derivs: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    det: np.ndarray
    normal: np.ndarray
    second_form: np.ndarray
    christoffel: np.ndarray
    mean_curvature: np.ndarray
    norm_A_sq: np.ndarray
    trace_A3: np.ndarray
    grad_A: np.ndarray = field(default=None)
    norm_grad_A_sq: np.ndarray = field(default=None)


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteField(f"{name} has non-finite entries")
    return arr


def compute_tangents(im):
    return im.gradient(im.points, im.shift)


def compute_metric(im, tangents=None):
    """g_ij = <dX/dx^i, dX/dx^j> from centered tangents."""
    T = compute_tangents(im) if tangents is None else tangents
    g = np.einsum("...ia,...ja->...ij", T, T)
    return _check_finite("metric", g)


def metric_det(g):
    g = np.asarray(g, dtype=np.float64)
    if g.shape[-1] == 1:
        return g[..., 0, 0].copy()
    return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]


def compute_inverse_metric(metric, det_floor=DET_FLOOR):
    """Closed-form inverse of the symmetric 1x1 or 2x2 metric at every point."""
    g = np.asarray(metric, dtype=np.float64)
    det = metric_det(g)
    bad = ~(det > det_floor)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), det.shape) if det.ndim else ()
        raise MetricDegenerate(idx, det[idx] if det.ndim else det)
    inv = np.empty_like(g)
    if g.shape[-1] == 1:
        inv[..., 0, 0] = 1.0 / g[..., 0, 0]
    else:
        inv[..., 0, 0] = g[..., 1, 1] / det
        inv[..., 1, 1] = g[..., 0, 0] / det
        inv[..., 0, 1] = -g[..., 0, 1] / det
        inv[..., 1, 0] = -g[..., 1, 0] / det
    return inv


def compute_normal(im, tangents=None):
    """Unit inner normal.

    The raw normal (tangent rotated by +pi/2 for curves, T_1 x T_2 for
    surfaces) is flipped globally when it points away from the centroid on
    average, so closed convex shapes get the normal toward their inside.
    """
    T = compute_tangents(im) if tangents is None else tangents
    if im.dim_domain == 1:
        t = T[..., 0, :]
        raw = np.stack([-t[..., 1], t[..., 0]], axis=-1)
        scale = np.linalg.norm(t, axis=-1)
    else:
        raw = np.cross(T[..., 0, :], T[..., 1, :])
        scale = np.linalg.norm(T[..., 0, :], axis=-1) * np.linalg.norm(T[..., 1, :], axis=-1)
    length = np.linalg.norm(raw, axis=-1)
    if np.any(~(length > 1e-14 * np.maximum(scale, 1e-300))) or np.any(scale == 0):
        raise DegenerateFrame("tangent vectors are linearly dependent")
    nrm = raw / length[..., None]
    centroid = im.points[im.interior].reshape(-1, im.points.shape[-1]).mean(axis=0)
    outward = np.einsum("...a,...a->...", nrm[im.interior], im.points[im.interior] - centroid)
    if outward.sum() > 0:
        nrm = -nrm
    return nrm


def compute_second_derivs(im):
    return im.hessian(im.points, im.shift)


def compute_second_form(im, normal, second_derivs=None):
    """h_ij = <n, d^2X/dx^i dx^j>."""
    D = compute_second_derivs(im) if second_derivs is None else second_derivs
    return _check_finite("second fundamental form", np.einsum("...ija,...a->...ij", D, normal))


def compute_mean_curvature(g_inv, h):
    return np.einsum("...ij,...ij->...", g_inv, h)


def compute_norm_A_sq(g_inv, h):
    """|A|^2 = g^ij g^kl h_ik h_jl."""
    return np.einsum("...ij,...kl,...ik,...jl->...", g_inv, g_inv, h, h, optimize=True)


def compute_trace_A3(g_inv, h):
    """tr(A^3) = g^ij g^kl g^mn h_ik h_lm h_nj."""
    return np.einsum("...ij,...kl,...mn,...ik,...lm,...nj->...",
                     g_inv, g_inv, g_inv, h, h, h, optimize=True)


def compute_christoffel(im, g_inv, tangents=None, second_derivs=None):
    """Gamma^k_ij = g^kl <d^2X/dx^i dx^j, dX/dx^l>, indexed [k, i, j]."""
    T = compute_tangents(im) if tangents is None else tangents
    D = compute_second_derivs(im) if second_derivs is None else second_derivs
    proj = np.einsum("...ija,...la->...ijl", D, T)
    return np.einsum("...kl,...ijl->...kij", g_inv, proj)


def _as_vector_field(im, field):
    n = im.dim_domain
    arr = np.asarray(field, dtype=np.float64)
    if arr.shape == im.grid_shape:
        return arr[..., None], True
    if arr.shape[:n] != im.grid_shape or arr.ndim != n + 1:
        raise ValueError(f"field shape {arr.shape} does not match grid {im.grid_shape}")
    return arr, False


def laplace_beltrami(im, cache, field=None, shift=None):
    """g^ij (d_ij F - Gamma^k_ij d_k F) with centered differences.

    ``field=None`` applies the operator to the positions themselves.  With the
    Christoffel symbols from :func:`compute_christoffel` this equals ``H n``
    up to roundoff at the discrete level (the tangential part of d_ij X is
    removed exactly).
    """
    if field is None:
        field, shift = im.points, im.shift
    F, scalar = _as_vector_field(im, field)
    dF = im.gradient(F, shift)
    d2F = im.hessian(F, shift)
    g_inv, gam = cache.inverse_metric, cache.christoffel
    out = np.einsum("...ij,...ija->...a", g_inv, d2F)
    out -= np.einsum("...ij,...kij,...ka->...a", g_inv, gam, dF, optimize=True)
    return out[..., 0] if scalar else out


def laplace_beltrami_divergence(im, cache, field=None, shift=None):
    """Divergence form (1/sqrt g) d_i (sqrt g g^ij d_j F).

    Independent discretization of the same continuum operator; it differs
    from :func:`laplace_beltrami` by O(h^2) and serves as the second route in
    the Gauss identity check.
    """
    if field is None:
        field, shift = im.points, im.shift
    F, scalar = _as_vector_field(im, field)
    dF = im.gradient(F, shift)
    root = np.sqrt(cache.det)
    flux = root[..., None, None] * np.einsum("...ij,...ja->...ia", cache.inverse_metric, dF)
    n = im.dim_domain
    div = sum(im.d1(flux[(slice(None),) * n + (i,)], i) for i in range(n))
    out = div / root[..., None]
    return out[..., 0] if scalar else out


def compute_grad_A(im, cache):
    """Covariant derivative nabla_k h_ij and |nabla A|^2.

    Returns ``(grad, norm_sq)`` with ``grad`` indexed ``[k, i, j]``.
    """
    h, gam, g_inv = cache.second_form, cache.christoffel, cache.inverse_metric
    grad = im.gradient(h)
    grad = grad - np.einsum("...lki,...lj->...kij", gam, h)
    grad = grad - np.einsum("...lkj,...il->...kij", gam, h)
    norm_sq = np.einsum("...kp,...iq,...jr,...kij,...pqr->...",
                        g_inv, g_inv, g_inv, grad, grad, optimize=True)
    return grad, norm_sq


def build_cache(im, det_floor=DET_FLOOR, with_grad_A=True):
    T = compute_tangents(im)
    g = compute_metric(im, T)
    g_inv = compute_inverse_metric(g, det_floor)
    D = compute_second_derivs(im)
    nrm = compute_normal(im, T)
    h = compute_second_form(im, nrm, D)
    gam = compute_christoffel(im, g_inv, T, D)
    cache = GeometryCache(
        immersion=im,
        tangents=T,
        second_derivs=D,
        metric=g,
        inverse_metric=g_inv,
        det=metric_det(g),
        normal=nrm,
        second_form=h,
        christoffel=gam,
        mean_curvature=compute_mean_curvature(g_inv, h),
        norm_A_sq=compute_norm_A_sq(g_inv, h),
        trace_A3=compute_trace_A3(g_inv, h),
    )
    if with_grad_A:
        grad, norm_sq = compute_grad_A(im, cache)
        object.__setattr__(cache, "grad_A", grad)
        object.__setattr__(cache, "norm_grad_A_sq", norm_sq)
    return cache


def interior_max(im, arr):
    """Max-norm of ``arr`` over non-ghost points (all trailing components)."""
    return float(np.max(np.abs(np.asarray(arr)[im.interior])))
