"""Explicit time stepping of X_tt = H n.

The scheme is the three-level central (leapfrog) scheme written in
velocity form:

    X^{n+1} = X^n + dt V^n + dt^2/2 F^n
    V^{n+1} = V^n + dt/2 (F^n + F^{n+1})

which for constant dt is X^{n+1} = 2X^n - X^{n-1} + dt^2 F^n, and for varying
dt reproduces the standard nonuniform three-level correction.  The first
step is the Taylor bootstrap X^1 = X^0 + dt X_1 + dt^2/2 F(X^0).
"""
from dataclasses import dataclass, field, replace

import numpy as np

from hmcf import geometry as geo
from hmcf import shapes
from hmcf.errors import (BlowUpDetected, CollapseDetected, DegenerateFrame,
                         DiffeoDegenerate, MetricDegenerate)

DEFAULT_SAFETY = 0.25
H_MAX = 1e6


@dataclass(frozen=True)
class StepperConfig:
    cfl_safety: float = DEFAULT_SAFETY
    det_floor: float = geo.DET_FLOOR
    h_max: float = H_MAX
    fixed_dt: float = None
    fixed_point_iters: int = 3


def flow_rhs(cache, debug=False):
    """Acceleration H n.  With ``debug`` returns Laplace-Beltrami of X instead,
    after checking it against H n (Gauss identity)."""
    hn = cache.mean_curvature[..., None] * cache.normal
    if not debug:
        return hn
    im = cache.immersion
    lap = geo.laplace_beltrami(im, cache)
    h2 = max(im.spacing) ** 2
    scale = 1.0 + geo.interior_max(im, hn)
    err = geo.interior_max(im, lap - hn)
    assert err <= 10.0 * h2 * scale, f"Gauss identity violated: {err:.3e}"
    return lap


def hmcf_rhs(cache, velocity=None):
    return flow_rhs(cache)


hmcf_rhs.velocity_dependent = False


def cfl_dt(cache, spacing=None, safety=DEFAULT_SAFETY):
    """safety * min over points and axes of dx^i / sqrt(g^ii)."""
    im = cache.immersion
    spacing = im.spacing if spacing is None else spacing
    g_inv = cache.inverse_metric[im.interior]
    best = np.inf
    for i, h in enumerate(spacing):
        gii = g_inv[..., i, i]
        if np.any(~(gii > 0)):
            raise MetricDegenerate((0,) * im.dim_domain, 0.0)
        best = min(best, float(np.min(h / np.sqrt(gii))))
    return safety * best


class RadialGhostBoundary:
    """Ghost rows of a padded axis follow the radius of the nearest real row.

    Used for sphere bands: a ghost node keeps its original direction from
    the center and takes the radius and radial speed of the first interior
    row at the same longitude.
    """

    def __init__(self, im, center=None, axis=0):
        self.axis = axis
        self.pad = im.pad[axis]
        self.center = shapes.centroid(im) if center is None else np.asarray(center, float)
        d = im.points - self.center
        self.directions = d / np.linalg.norm(d, axis=-1)[..., None]

    def _rows(self, n_rows):
        p = self.pad
        return [(k, p) for k in range(p)] + [(k, n_rows - p - 1) for k in range(n_rows - p, n_rows)]

    def apply(self, points, velocity):
        X = np.moveaxis(points.copy(), self.axis, 0)
        V = np.moveaxis(velocity.copy(), self.axis, 0)
        dirs = np.moveaxis(self.directions, self.axis, 0)
        for ghost, src in self._rows(X.shape[0]):
            rho = np.linalg.norm(X[src] - self.center, axis=-1)
            speed = np.einsum("...a,...a->...", V[src], dirs[src])
            X[ghost] = self.center + rho[..., None] * dirs[ghost]
            V[ghost] = speed[..., None] * dirs[ghost]
        return np.moveaxis(X, 0, self.axis), np.moveaxis(V, 0, self.axis)


@dataclass
class DeTurckState:
    """Diffeomorphism y(x, t) on the parameter torus, stored as coordinates."""

    y: np.ndarray
    y_t: np.ndarray
    background_christoffel: np.ndarray
    y_tt: np.ndarray = None


@dataclass
class FlowState:
    immersion: geo.Immersion
    velocity: np.ndarray
    cache: geo.GeometryCache
    acceleration: np.ndarray
    t: float = 0.0
    step: int = 0
    dt_current: float = None
    prev_immersion: geo.Immersion = None
    boundary: RadialGhostBoundary = None
    deturck: DeTurckState = None


def _parameter_coords(im):
    axes = [im.spacing[i] * np.arange(s) for i, s in enumerate(im.grid_shape)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack(grids, axis=-1)


def _y_shift(im):
    return np.diag([h * s for h, s in zip(im.spacing, im.grid_shape)])


def init_deturck(im, cache):
    if not all(im.periodic):
        raise ValueError("DeTurck coupling needs a fully periodic parameter domain")
    y = _parameter_coords(im)
    ds = DeTurckState(y, np.zeros_like(y), cache.christoffel.copy())
    ds.y_tt = deturck_rhs(ds, cache)
    return ds


def _interp_periodic(field_, positions, spacing):
    """Multilinear periodic interpolation of a grid field at parameter positions."""
    n = len(spacing)
    shape = field_.shape[:n]
    idx = [positions[..., i] / spacing[i] for i in range(n)]
    lo = [np.floor(p).astype(np.int64) for p in idx]
    w = [p - l for p, l in zip(idx, lo)]
    out = 0.0
    for corner in range(2 ** n):
        weight = 1.0
        take = []
        for i in range(n):
            bit = (corner >> i) & 1
            weight = weight * (w[i] if bit else 1.0 - w[i])
            take.append((lo[i] + bit) % shape[i])
        val = field_[tuple(take)]
        out = out + weight.reshape(weight.shape + (1,) * (val.ndim - weight.ndim)) * val
    return out


def deturck_rhs(ds, cache):
    """g^jl (d_jl y^a + d_j y^b d_l y^c Gh^a_bc(y) - d_k y^a Gt^k_jl)."""
    im = cache.immersion
    shift = _y_shift(im)
    dy = im.gradient(ds.y, shift)  # [j, a]
    jac = geo.metric_det(dy) if im.dim_domain == 2 else dy[..., 0, 0]
    if np.any(~(jac > 0)):
        raise DiffeoDegenerate("diffeomorphism Jacobian is not positive")
    d2y = im.hessian(ds.y, shift)  # [j, l, a]
    gam_hat = _interp_periodic(cache.christoffel, ds.y, im.spacing)  # [a, b, c]
    term = d2y + np.einsum("...jb,...lc,...abc->...jla", dy, dy, gam_hat, optimize=True)
    term -= np.einsum("...ka,...kjl->...jla", dy, ds.background_christoffel)
    return np.einsum("...jl,...jla->...a", cache.inverse_metric, term)


def make_state(im, velocity=None, t=0.0, cfg=StepperConfig(), rhs=hmcf_rhs,
               deturck=False, boundary="auto"):
    """Initial FlowState for data (X0, X1)."""
    v = np.zeros_like(im.points) if velocity is None else np.array(velocity, dtype=np.float64)
    if v.shape != im.points.shape:
        raise ValueError("velocity grid is not congruent with the immersion grid")
    if boundary == "auto":
        boundary = RadialGhostBoundary(im) if any(im.pad) else None
    if boundary is not None:
        pts, v = boundary.apply(im.points, v)
        im = im.with_points(pts)
    cache = geo.build_cache(im, cfg.det_floor, with_grad_A=False)
    fs = FlowState(im, v, cache, rhs(cache, v), t=t, boundary=boundary)
    if deturck:
        fs.deturck = init_deturck(im, cache)
    return fs


def _new_cache(im, t_old, t_new, cfg):
    try:
        return geo.build_cache(im, cfg.det_floor, with_grad_A=False)
    except (MetricDegenerate, DegenerateFrame) as exc:
        raise CollapseDetected((t_old, t_new), getattr(exc, "det", None)) from exc


def step(fs, cfg=StepperConfig(), rhs=hmcf_rhs, dt=None):
    """Advance one level; dt from the CFL rule unless given or fixed in ``cfg``."""
    if dt is None:
        dt = cfg.fixed_dt if cfg.fixed_dt is not None else cfl_dt(fs.cache, safety=cfg.cfl_safety)
    im = fs.immersion
    X_new = im.points + dt * fs.velocity + 0.5 * dt * dt * fs.acceleration
    V_pred = fs.velocity + dt * fs.acceleration
    if fs.boundary is not None:
        X_new, V_pred = fs.boundary.apply(X_new, V_pred)
    im_new = im.with_points(X_new)
    cache = _new_cache(im_new, fs.t, fs.t + dt, cfg)
    h_abs = geo.interior_max(im_new, cache.mean_curvature)
    if h_abs >= cfg.h_max:
        raise BlowUpDetected(fs.t + dt, h_abs)
    if getattr(rhs, "velocity_dependent", False):
        V_new = V_pred
        for _ in range(cfg.fixed_point_iters):
            A_new = rhs(cache, V_new)
            V_new = fs.velocity + 0.5 * dt * (fs.acceleration + A_new)
            if fs.boundary is not None:
                _, V_new = fs.boundary.apply(X_new, V_new)
        A_new = rhs(cache, V_new)
    else:
        A_new = rhs(cache, None)
        V_new = fs.velocity + 0.5 * dt * (fs.acceleration + A_new)
        if fs.boundary is not None:
            _, V_new = fs.boundary.apply(X_new, V_new)
    ds_new = None
    if fs.deturck is not None:
        ds = fs.deturck
        y = ds.y + dt * ds.y_t + 0.5 * dt * dt * ds.y_tt
        ds_new = DeTurckState(y, ds.y_t, ds.background_christoffel)
        ds_new.y_tt = deturck_rhs(ds_new, cache)
        ds_new.y_t = ds.y_t + 0.5 * dt * (ds.y_tt + ds_new.y_tt)
    return FlowState(im_new, V_new, cache, A_new, t=fs.t + dt, step=fs.step + 1,
                     dt_current=dt, prev_immersion=im, boundary=fs.boundary, deturck=ds_new)


def diagnostics(fs, center=None):
    im, cache = fs.immersion, fs.cache
    I = im.interior
    r = shapes.radii(im, center)[I]
    r_mean = float(np.mean(r))
    gauss = geo.laplace_beltrami_divergence(im, cache) - cache.mean_curvature[..., None] * cache.normal
    return {
        "r_mean": r_mean,
        "r_spread": float((r.max() - r.min()) / r_mean) if r_mean > 0 else 0.0,
        "det_g_min": float(np.min(cache.det[I])),
        "H_max": geo.interior_max(im, cache.mean_curvature),
        "energy": float(0.5 * np.mean(np.sum(fs.velocity[I] ** 2, axis=-1))),
        "gauss_residual": geo.interior_max(im, gauss),
    }


@dataclass
class Snapshot:
    t: float
    step: int
    points: np.ndarray
    velocity: np.ndarray
    diagnostics: dict

    def immersion_like(self, im):
        return im.with_points(self.points)


@dataclass
class RunResult:
    event: str  # "finished", "collapse" or "blowup"
    t_event: float
    bracket: tuple = None
    snapshots: list = field(default_factory=list)
    final: FlowState = None


def run(fs0, t_end, cfg=StepperConfig(), rhs=hmcf_rhs, snapshot_every=1,
        callback=None, center=None, max_steps=1_000_000):
    """Step until ``t_end`` or a collapse/blow-up event.

    Snapshots (immutable copies plus scalar diagnostics) are taken every
    ``snapshot_every`` steps, always including the first and last healthy
    state; each one is handed to ``callback`` if given.
    """
    center = shapes.centroid(fs0.immersion) if center is None else center
    snaps = []

    def take(fs):
        snap = Snapshot(fs.t, fs.step, fs.immersion.points.copy(), fs.velocity.copy(),
                        diagnostics(fs, center) if snapshot_every else {})
        snaps.append(snap)
        if callback is not None:
            callback(snap)

    fs = fs0
    take(fs)
    event, t_event, bracket = "finished", None, None
    while fs.t < t_end and fs.step - fs0.step < max_steps:
        dt = cfg.fixed_dt if cfg.fixed_dt is not None else cfl_dt(fs.cache, safety=cfg.cfl_safety)
        dt = min(dt, t_end - fs.t)
        try:
            fs = step(fs, cfg, rhs, dt=dt)
        except CollapseDetected as exc:
            event, t_event, bracket = "collapse", exc.t_bracket[1], exc.t_bracket
            break
        except BlowUpDetected as exc:
            event, t_event, bracket = "blowup", exc.t, (fs.t, exc.t)
            break
        if snapshot_every and (fs.step - fs0.step) % snapshot_every == 0:
            take(fs)
    if snaps[-1].step != fs.step:
        take(fs)
    if event == "finished":
        t_event = fs.t
    return RunResult(event, t_event, bracket, snaps, fs)


def reverse_check(fs0, k_steps, cfg=StepperConfig(), rhs=hmcf_rhs):
    """Run k steps at frozen dt, flip the velocity, run k back; max |X - X0|."""
    if k_steps == 0:
        return 0.0
    dt = cfl_dt(fs0.cache, safety=cfg.cfl_safety)
    fs = fs0
    for _ in range(k_steps):
        fs = step(fs, cfg, rhs, dt=dt)
    fs = replace(fs, velocity=-fs.velocity)
    for _ in range(k_steps):
        fs = step(fs, cfg, rhs, dt=dt)
    return float(np.max(np.abs(fs.immersion.points - fs0.immersion.points)))
