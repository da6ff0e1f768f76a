"""Discrete residuals of the curvature identities and their evolution laws.

Every residual is LHS - RHS of an identity that holds exactly for smooth
solutions, so on a grid it only measures discretization error and must
shrink at the scheme order.  Time derivatives come from centered
differences across three snapshots at equal spacing ``dt``; spatial
covariant derivatives are nested centered stencils with Christoffel
corrections.

Index conventions: tensors carry grid axes first, then their indices in the
written order.  Christoffel symbols are stored ``[k, i, j]`` for
Gamma^k_ij, and ``grad`` of a tensor puts the derivative index first.

Term map for the evolution laws (``Xt_i`` = d^2X/dt dx^i, ``a_i`` =
<n, Xt_i>, ``Q_ij`` = <Xt_i, Xt_j>, subscript t = time derivative):

=====  ==========================================================
g_tt   -2 H h_ij + 2 Q_ij
n_tt   -g^ij d_iH T_j + g^ij a_i [2 g^kl <T_j, Xt_l> T_k
       + g^kl <T_l, Xt_j> T_k - Xt_j]
h_tt   Lap h_ij - 2H h_il h_mj g^lm + |A|^2 h_ij + g^kl h_ij a_k a_l
       - 2 Gamma^k_ij,t a_k
H_tt   Lap H + H|A|^2 - 2 g^ik g^jl h_ij Q_kl + H g^kl a_k a_l
       - 2 g^ij Gamma^k_ij,t a_k + 2 g^ik g^jp g^lq h_ij g_pq,t g_kl,t
       - 2 g^ik g^jl g_kl,t h_ij,t
A2_tt  Lap|A|^2 - 2|grad A|^2 + 2|A|^4 + 2|A|^2 g^pq a_p a_q
       + 2 g^ij g^kl h_ik,t h_jl,t - 8 g^im g^jn g^kl h_jl g_mn,t h_ik,t
       - 4 g^im g^jn g^kl h_ik h_jl Q_mn
       + 2 g^im g_pq,t g_mn,t h_ik h_jl (2 g^jp g^nq g^kl + g^jn g^kp g^lq)
       - 4 g^ij g^kl h_jl Gamma^p_ik,t a_p
=====  ==========================================================
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hmcf import flow, geometry as geo, radial, shapes

IDENTITIES = ("Eq51", "Eq52", "Eq53", "Eq54", "Eq55", "Eq56", "Eq57")


def _es(spec, *ops):
    return np.einsum(spec, *ops, optimize=True)


# -- spatial covariant calculus ------------------------------------------------

def hessian_scalar(im, cache, f):
    """nabla_i nabla_j f = d_ij f - Gamma^k_ij d_k f."""
    return im.hessian(f) - _es("...kij,...k->...ij", cache.christoffel, im.gradient(f))


def laplacian_scalar(im, cache, f):
    return _es("...ij,...ij->...", cache.inverse_metric, hessian_scalar(im, cache, f))


def covariant_grad_2tensor(im, cache, T):
    """nabla_k T_ij indexed [k, i, j]."""
    gam = cache.christoffel
    out = im.gradient(T)
    out -= _es("...mki,...mj->...kij", gam, T)
    out -= _es("...mkj,...im->...kij", gam, T)
    return out


def covariant_grad_3tensor(im, cache, S):
    """nabla_l S_kij indexed [l, k, i, j]."""
    gam = cache.christoffel
    out = im.gradient(S)
    out -= _es("...mlk,...mij->...lkij", gam, S)
    out -= _es("...mli,...kmj->...lkij", gam, S)
    out -= _es("...mlj,...kim->...lkij", gam, S)
    return out


def laplacian_2tensor(im, cache, T):
    """g^kl nabla_l nabla_k T_ij with nested covariant stencils."""
    second = covariant_grad_3tensor(im, cache, covariant_grad_2tensor(im, cache, T))
    return _es("...kl,...lkij->...ij", cache.inverse_metric, second)


def _grad_A(im, cache):
    if cache.grad_A is None:
        return geo.compute_grad_A(im, cache)
    return cache.grad_A, cache.norm_grad_A_sq


# -- elliptic identities -------------------------------------------------------

def residual_simons(cache):
    """Lap h_ij - (nabla_i nabla_j H + H h_il g^lm h_mj - |A|^2 h_ij)."""
    im, h, gi = cache.immersion, cache.second_form, cache.inverse_metric
    H, A2 = cache.mean_curvature, cache.norm_A_sq
    lhs = laplacian_2tensor(im, cache, h)
    rhs = (hessian_scalar(im, cache, H) + H[..., None, None] * _es("...il,...lm,...mj->...ij", h, gi, h)
           - A2[..., None, None] * h)
    return lhs - rhs


def residual_simons_A2(cache):
    """Lap|A|^2 - (2 g^ik g^jl h_kl nabla_i nabla_j H + 2|grad A|^2 + 2H tr A^3 - 2|A|^4)."""
    im, h, gi = cache.immersion, cache.second_form, cache.inverse_metric
    H, A2 = cache.mean_curvature, cache.norm_A_sq
    _, grad_sq = _grad_A(im, cache)
    lhs = laplacian_scalar(im, cache, A2)
    rhs = (2.0 * _es("...ik,...jl,...kl,...ij->...", gi, gi, h, hessian_scalar(im, cache, H))
           + 2.0 * grad_sq + 2.0 * H * cache.trace_A3 - 2.0 * A2 ** 2)
    return lhs - rhs


# -- time histories ------------------------------------------------------------

class History:
    """Three geometry caches at times t - dt, t, t + dt."""

    def __init__(self, cache_prev, cache_mid, cache_next, dt):
        if not dt > 0:
            raise ValueError("snapshot spacing dt must be positive")
        self.prev, self.mid, self.next = cache_prev, cache_mid, cache_next
        self.dt = float(dt)
        self.im = cache_mid.immersion

    @classmethod
    def from_immersions(cls, ims, dt):
        a, b, c = ims
        return cls(geo.build_cache(a, with_grad_A=False), geo.build_cache(b),
                   geo.build_cache(c, with_grad_A=False), dt)

    def _d_t(self, name):
        return (getattr(self.next, name) - getattr(self.prev, name)) / (2.0 * self.dt)

    def _d_tt(self, name):
        p, m, q = (getattr(c, name) for c in (self.prev, self.mid, self.next))
        return (q - 2.0 * m + p) / self.dt ** 2

    @cached_property
    def velocity(self):
        return (self.next.immersion.points - self.prev.immersion.points) / (2.0 * self.dt)

    @cached_property
    def Xt_i(self):
        """d^2X/dt dx^i, indexed [i, a]."""
        return self.im.gradient(self.velocity)

    @cached_property
    def a(self):
        return _es("...a,...ia->...i", self.mid.normal, self.Xt_i)

    @cached_property
    def Q(self):
        return _es("...ia,...ja->...ij", self.Xt_i, self.Xt_i)

    g_t = cached_property(lambda self: self._d_t("metric"))
    g_tt = cached_property(lambda self: self._d_tt("metric"))
    h_t = cached_property(lambda self: self._d_t("second_form"))
    h_tt = cached_property(lambda self: self._d_tt("second_form"))
    gamma_t = cached_property(lambda self: self._d_t("christoffel"))
    n_tt = cached_property(lambda self: self._d_tt("normal"))
    H_tt = cached_property(lambda self: self._d_tt("mean_curvature"))
    A2_tt = cached_property(lambda self: self._d_tt("norm_A_sq"))


def residual_g_tt(hist):
    c = hist.mid
    rhs = -2.0 * c.mean_curvature[..., None, None] * c.second_form + 2.0 * hist.Q
    return hist.g_tt - rhs


def residual_normal_tt(hist):
    c, im = hist.mid, hist.im
    gi, T, Xt = c.inverse_metric, c.tangents, hist.Xt_i
    dH = im.gradient(c.mean_curvature)
    TXt = _es("...ja,...la->...jl", T, Xt)  # <T_j, Xt_l>
    bracket = (2.0 * _es("...kl,...jl,...ka->...ja", gi, TXt, T)
               + _es("...kl,...lj,...ka->...ja", gi, TXt, T) - Xt)
    rhs = -_es("...ij,...i,...ja->...a", gi, dH, T) + _es("...ij,...i,...ja->...a", gi, hist.a, bracket)
    return hist.n_tt - rhs


def residual_h_tt(hist):
    c, im = hist.mid, hist.im
    gi, h, H, A2, a = c.inverse_metric, c.second_form, c.mean_curvature, c.norm_A_sq, hist.a
    rhs = (laplacian_2tensor(im, c, h)
           - 2.0 * H[..., None, None] * _es("...il,...mj,...lm->...ij", h, h, gi)
           + A2[..., None, None] * h
           + _es("...kl,...k,...l->...", gi, a, a)[..., None, None] * h
           - 2.0 * _es("...kij,...k->...ij", hist.gamma_t, a))
    return hist.h_tt - rhs


def residual_H_tt(hist):
    c, im = hist.mid, hist.im
    gi, h, H, A2, a = c.inverse_metric, c.second_form, c.mean_curvature, c.norm_A_sq, hist.a
    g_t, h_t = hist.g_t, hist.h_t
    rhs = (laplacian_scalar(im, c, H) + H * A2
           - 2.0 * _es("...ik,...jl,...ij,...kl->...", gi, gi, h, hist.Q)
           + H * _es("...kl,...k,...l->...", gi, a, a)
           - 2.0 * _es("...ij,...kij,...k->...", gi, hist.gamma_t, a)
           + 2.0 * _es("...ik,...jp,...lq,...ij,...pq,...kl->...", gi, gi, gi, h, g_t, g_t)
           - 2.0 * _es("...ik,...jl,...kl,...ij->...", gi, gi, g_t, h_t))
    return hist.H_tt - rhs


def residual_A2_tt(hist):
    c, im = hist.mid, hist.im
    gi, h, A2, a = c.inverse_metric, c.second_form, c.norm_A_sq, hist.a
    g_t, h_t = hist.g_t, hist.h_t
    _, grad_sq = _grad_A(im, c)
    quartic = (2.0 * _es("...jp,...nq,...kl->...jnkpql", gi, gi, gi)
               + _es("...jn,...kp,...lq->...jnkpql", gi, gi, gi))
    rhs = (laplacian_scalar(im, c, A2) - 2.0 * grad_sq + 2.0 * A2 ** 2
           + 2.0 * A2 * _es("...pq,...p,...q->...", gi, a, a)
           + 2.0 * _es("...ij,...kl,...ik,...jl->...", gi, gi, h_t, h_t)
           - 8.0 * _es("...im,...jn,...kl,...jl,...mn,...ik->...", gi, gi, gi, h, g_t, h_t)
           - 4.0 * _es("...im,...jn,...kl,...ik,...jl,...mn->...", gi, gi, gi, h, h, hist.Q)
           + 2.0 * _es("...im,...pq,...mn,...ik,...jl,...jnkpql->...", gi, g_t, g_t, h, h, quartic)
           - 4.0 * _es("...ij,...kl,...jl,...pik,...p->...", gi, gi, h, hist.gamma_t, a))
    return hist.A2_tt - rhs


SPATIAL = {"Eq51": residual_simons, "Eq52": residual_simons_A2}
TEMPORAL = {"Eq53": residual_g_tt, "Eq54": residual_normal_tt, "Eq55": residual_h_tt,
            "Eq56": residual_H_tt, "Eq57": residual_A2_tt}


def evaluate(identity_id, hist):
    """Max-norm residual of one identity on the middle level of ``hist``."""
    if identity_id in SPATIAL:
        res = SPATIAL[identity_id](hist.mid)
    elif identity_id in TEMPORAL:
        res = TEMPORAL[identity_id](hist)
    else:
        raise KeyError(f"unknown identity {identity_id!r}")
    return geo.interior_max(hist.im, res)


# -- reports -------------------------------------------------------------------

def estimate_order(levels, norms):
    """Least-squares slope of -log2(residual) against log2(N); None below 3 levels."""
    if len(levels) < 3:
        return None
    x = np.log2(np.asarray(levels, float))
    y = np.log2(np.asarray(norms, float))
    return float(-np.polyfit(x, y, 1)[0])


ROUNDOFF_FACTOR = 1e4


def roundoff_floor(identity_id, dx, dt):
    """Residual size explained by cancellation alone.

    Temporal identities divide snapshot differences by dt^2 and the spatial
    ones nest two derivative stencils, so roundoff is amplified by 1/dt^2 or
    1/dx^2.  A family that satisfies an identity exactly (e.g. a fixed
    normal field) stays under this floor at every level and has no
    meaningful convergence order.
    """
    step = dx if identity_id in SPATIAL else dt
    return ROUNDOFF_FACTOR * np.finfo(float).eps / step ** 2


@dataclass
class ResidualReport:
    identity_id: str
    grid_levels: list
    residual_norms: list
    context: str
    dts: list = field(default_factory=list)
    dxs: list = field(default_factory=list)

    def __post_init__(self):
        norms = np.asarray(self.residual_norms, float)
        if not (np.all(np.isfinite(norms)) and np.all(norms > 0)):
            raise ValueError(f"{self.identity_id}: residual norms must be positive and finite")

    @property
    def estimated_order(self):
        return estimate_order(self.grid_levels, self.residual_norms)

    @property
    def at_roundoff(self):
        """True when every level sits below its roundoff floor."""
        if not self.dxs:
            return False
        return all(r <= roundoff_floor(self.identity_id, dx, dt)
                   for r, dx, dt in zip(self.residual_norms, self.dxs, self.dts))

    def converges(self, min_order=1.8):
        if self.at_roundoff:
            return True
        order = self.estimated_order
        return order is not None and order >= min_order


# -- histories for analytic and simulated flows -----------------------------------

def analytic_sphere_history(n, t=0.3, dt=None, r0=1.0, r1=0.0, alpha_max=math.pi / 4):
    """Sphere band driven by the exact radial solution (c = 2); dt ~ dalpha."""
    probe = shapes.sphere_band(n, 2 * n, 1.0, alpha_max)
    dt = 0.25 * probe.spacing[0] if dt is None else dt
    rs = radial.radial_samples(r0, r1, 2.0, [t - dt, t, t + dt])[:, 0]
    ims = [shapes.sphere_band(n, 2 * n, r, alpha_max) for r in rs]
    return History.from_immersions(ims, dt), float(rs[1])


def analytic_cylinder_history(n, t=0.3, dt=None, r0=1.0, r1=0.0, length=2 * math.pi):
    probe = shapes.cylinder(n, n, 1.0, length)
    dt = 0.25 * probe.spacing[0] if dt is None else dt
    rs = radial.radial_samples(r0, r1, 1.0, [t - dt, t, t + dt])[:, 0]
    ims = [shapes.cylinder(n, n, r, length) for r in rs]
    return History.from_immersions(ims, dt), float(rs[1])


def wavy_cylinder(n, amp=0.15, a=1.3, b=1.0, length=2 * math.pi):
    """Elliptic cylinder with an axially modulated cross-section."""
    base = shapes.cylinder(n, n, 1.0, length)
    th = np.arange(n) * 2 * math.pi / n
    z = np.arange(n) * length / n
    tt, zz = np.meshgrid(th, z, indexing="ij")
    mod = 1.0 + amp * np.cos(2 * math.pi * zz / length)
    pts = np.stack([a * mod * np.cos(tt), b * mod * np.sin(tt), zz], axis=-1)
    return base.with_points(pts)


def simulated_history(im0, t_mid, dt):
    """Integrate X_tt = H n at fixed dt from rest; snapshots around ``t_mid``."""
    k = max(1, int(round(t_mid / dt)))
    cfg = flow.StepperConfig(fixed_dt=dt)
    fs = flow.make_state(im0, cfg=cfg)
    ims = []
    for i in range(k + 1):
        if i >= k - 1:
            ims.append(fs.immersion)
        fs = flow.step(fs, cfg, dt=dt)
    ims.append(fs.immersion)
    return History.from_immersions(ims, dt)


SIM_SHAPES = {
    "ellipse": lambda n: shapes.ellipse(n, 2.0, 1.0),
    "wavy_cylinder": wavy_cylinder,
}


def refinement_study(context, levels=(32, 64, 128), ids=IDENTITIES, t=0.3, shape="wavy_cylinder",
                     dt_factor=0.1):
    """ResidualReport per identity over grid ``levels`` with dt proportional to dx."""
    norms = {i: [] for i in ids}
    dts, dxs = [], []
    for n in levels:
        if context == "AnalyticSphere":
            hist, _ = analytic_sphere_history(n, t)
        elif context == "AnalyticCylinder":
            hist, _ = analytic_cylinder_history(n, t)
        elif context == "SimulatedFlow":
            im0 = SIM_SHAPES[shape](n)
            hist = simulated_history(im0, t, dt_factor * 2 * math.pi / n)
        else:
            raise ValueError(f"unknown context {context!r}")
        dts.append(hist.dt)
        dxs.append(max(hist.im.spacing))
        for i in ids:
            norms[i].append(evaluate(i, hist))
    return [ResidualReport(i, list(levels), norms[i], context, dts, dxs) for i in ids]


def sphere_closed_form_terms(r, n=16):
    """Contract the exact sphere fields g = r^2 D, h = r D, D = diag(1, cos^2 a).

    Returns the largest deviation of (H, |A|^2, tr A^3) from (2/r, 2/r^2, 2/r^3).
    """
    alpha = np.linspace(-math.pi / 4, math.pi / 4, n)
    D = np.zeros((n, 2, 2))
    D[:, 0, 0] = 1.0
    D[:, 1, 1] = np.cos(alpha) ** 2
    g, h = r * r * D, r * D
    gi = geo.compute_inverse_metric(g)
    got = (geo.compute_mean_curvature(gi, h), geo.compute_norm_A_sq(gi, h), geo.compute_trace_A3(gi, h))
    want = (2.0 / r, 2.0 / r ** 2, 2.0 / r ** 3)
    return max(float(np.max(np.abs(x - w))) for x, w in zip(got, want))
