"""Extremal timelike graphs (t, X(t, x)) in Minkowski space.

With W = X_t, s = |W|^2 and L = g^ij (X_ij - Gamma^k_ij X_k) the extremal
system consists of a gauge relation

    <X_tt, W> - g^ij (s - 1) <d_i W, X_j> = 0

and the evolution law

    X_tt + (s - 1) L - <X_tt, W> W / (s - 1) + g^kl <d_l W, W> X_k
         + g^ij <d_i W, X_j> W = 0.

Substituting the gauge relation into the third term cancels it against the
last one, leaving the explicit acceleration

    X_tt = (1 - s) L - g^kl <d_l W, W> X_k

which reduces to X_tt = L = H n at W = 0.
"""
from dataclasses import dataclass

import numpy as np

from hmcf import flow, geometry as geo, shapes
from hmcf.errors import LightConeViolation

EPS_LIGHT = 1e-6


@dataclass(frozen=True, eq=False)
class LorentzCache:
    induced_metric: np.ndarray  # [alpha, beta] with index 0 = time
    speed_sq: np.ndarray


def lorentz_cache(cache, velocity):
    W = np.asarray(velocity, dtype=np.float64)
    n = cache.immersion.dim_domain
    s = np.einsum("...a,...a->...", W, W)
    gh = np.empty(s.shape + (n + 1, n + 1))
    gh[..., 0, 0] = s - 1.0
    cross = np.einsum("...a,...ia->...i", W, cache.tangents)
    gh[..., 0, 1:] = cross
    gh[..., 1:, 0] = cross
    gh[..., 1:, 1:] = cache.metric
    return LorentzCache(gh, s)


def _check_subluminal(im, s, eps_light):
    s_max = geo.interior_max(im, s)
    if s_max >= 1.0 - eps_light:
        raise LightConeViolation(s_max)


def extremal_rhs(cache, velocity, eps_light=EPS_LIGHT):
    """Explicit acceleration of the extremal system at (X, X_t)."""
    im = cache.immersion
    W = np.asarray(velocity, dtype=np.float64)
    s = np.einsum("...a,...a->...", W, W)
    _check_subluminal(im, s, eps_light)
    L = geo.laplace_beltrami(im, cache)
    dW = im.gradient(W)
    b = np.einsum("...la,...a->...l", dW, W)
    tang = np.einsum("...kl,...l,...ka->...a", cache.inverse_metric, b, cache.tangents)
    return (1.0 - s)[..., None] * L - tang


class ExtremalRHS:
    """Stepper adapter: the acceleration depends on the velocity."""

    velocity_dependent = True

    def __init__(self, eps_light=EPS_LIGHT):
        self.eps_light = eps_light

    def __call__(self, cache, velocity):
        if velocity is None:
            velocity = np.zeros_like(cache.immersion.points)
        return extremal_rhs(cache, velocity, self.eps_light)


def gauge_residual_64(cache, velocity, acceleration):
    """<X_tt, W> - g^ij (|W|^2 - 1) <d_i W, X_j> per grid point."""
    im = cache.immersion
    W = np.asarray(velocity, dtype=np.float64)
    s = np.einsum("...a,...a->...", W, W)
    dW = im.gradient(W)
    div = np.einsum("...ij,...ia,...ja->...", cache.inverse_metric, dW, cache.tangents)
    return np.einsum("...a,...a->...", acceleration, W) - (s - 1.0) * div


def state_gauge_residual(fs):
    return geo.interior_max(fs.immersion, gauge_residual_64(fs.cache, fs.velocity, fs.acceleration))


def det_drift(times, immersions):
    """Centered time derivative of the integrated det(g) at interior snapshots.

    Returns ``(t_mid, drift)`` for the inner snapshots of the sequence.
    """
    times = np.asarray(times, dtype=np.float64)
    if len(times) != len(immersions):
        raise ValueError("one time per snapshot required")
    totals = []
    for im in immersions:
        g = geo.compute_metric(im)
        det = geo.metric_det(g) if im.dim_domain == 2 else g[..., 0, 0]
        totals.append(float(np.sum(det[im.interior])) * float(np.prod(im.spacing)))
    totals = np.asarray(totals)
    if len(totals) < 3:
        return times[:0], totals[:0]
    drift = (totals[2:] - totals[:-2]) / (times[2:] - times[:-2])
    return times[1:-1], drift


def fit_exponent(scales, values):
    """Slope of log(values) against log(scales), ignoring zero scales."""
    x = np.asarray(scales, float)
    y = np.asarray(values, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


@dataclass
class ScalingReport:
    eps: list
    discrepancy: list
    exponent: float


def rhs_scaling(im, profile, eps_list):
    """||extremal_rhs(eps * profile) - flow_rhs||_inf over an eps family."""
    cache = geo.build_cache(im, with_grad_A=False)
    base = flow.flow_rhs(cache)
    disc = [geo.interior_max(im, extremal_rhs(cache, e * np.asarray(profile)) - base) for e in eps_list]
    return ScalingReport(list(eps_list), disc, fit_exponent(eps_list, disc))


def zero_velocity_gap(im):
    """Max relative difference of the two right-hand sides at X_t = 0."""
    cache = geo.build_cache(im, with_grad_A=False)
    a = flow.flow_rhs(cache)
    b = extremal_rhs(cache, np.zeros_like(im.points))
    scale = max(geo.interior_max(im, a), np.finfo(float).tiny)
    return geo.interior_max(im, a - b) / scale


def radial_profile(im, center=None):
    """Unit outward radial field, orthogonal to the tangents on round shapes."""
    return shapes.radial_unit(im, center)


@dataclass
class LimitComparison:
    eps: list
    times: np.ndarray
    curves: list  # discrepancy over time per eps
    max_discrepancy: list
    exponent: float
    excess_exponent: float  # fit after removing the eps = 0 baseline


def limit_comparison(im0, profile, eps_list, t_end, dt=None, safety=flow.DEFAULT_SAFETY):
    """Integrate both systems from (X0, eps * profile) with a shared fixed dt.

    The extremal and hyperbolic trajectories are compared in max-norm at every
    step.  ``exponent`` fits the horizon-maximum discrepancy against eps;
    ``excess_exponent`` fits its growth over the eps = 0 run when that entry
    is present (both flows build velocity on their own, so the raw
    discrepancy keeps an eps-independent part).
    """
    profile = np.asarray(profile, dtype=np.float64)
    cache0 = geo.build_cache(im0, with_grad_A=False)
    dt = flow.cfl_dt(cache0, safety=safety) if dt is None else dt
    n_steps = int(np.ceil(t_end / dt - 1e-12))
    cfg = flow.StepperConfig(fixed_dt=dt)
    ext = ExtremalRHS()
    curves = []
    times = dt * np.arange(n_steps + 1)
    for eps in eps_list:
        v = eps * profile
        a = flow.make_state(im0, v, cfg=cfg)
        b = flow.make_state(im0, v, cfg=cfg, rhs=ext)
        curve = [0.0]
        for _ in range(n_steps):
            a = flow.step(a, cfg, dt=dt)
            b = flow.step(b, cfg, ext, dt=dt)
            curve.append(geo.interior_max(im0, a.immersion.points - b.immersion.points))
        curves.append(np.asarray(curve))
    peaks = [float(c.max()) for c in curves]
    exponent = fit_exponent(eps_list, peaks)
    excess = None
    if 0.0 in list(eps_list):
        base = peaks[list(eps_list).index(0.0)]
        excess = fit_exponent(eps_list, [p - base for p in peaks])
    return LimitComparison(list(eps_list), times, curves, peaks, exponent, excess)
