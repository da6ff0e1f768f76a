"""Graph perturbations of the flat plane.

X = X0 + Y with X0 = (x^1, .., x^n, 0) on a periodic chart.  In these
coordinates the flow reads Y_tt = g^ij(dY) d_ij Y with

    g_ij = delta_ij + d_i y^j + d_j y^i + y_ij,   y_ij = sum_p d_i y^p d_j y^p,

and for small data Y = eps X1, Y_t = eps X2 the solution departs from the
linear wave evolution at order eps^2.  The periodic chart only supports
short-horizon statements: dispersive decay, and with it global existence,
is not available on a torus and is not reproduced here.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from hmcf import geometry as geo, shapes, stencils
from hmcf.errors import BlowUpDetected, MetricDegenerate, NonFiniteField

GRADIENT_LIMIT = 0.5
PERIOD = 2.0 * math.pi


@dataclass(frozen=True)
class GraphState:
    y: np.ndarray  # grid + (n+1,)
    y_t: np.ndarray
    epsilon: float
    t: float = 0.0
    spacing: tuple = None

    @property
    def domain_dim(self):
        return self.y.ndim - 1


def _spacing(y, spacing=None):
    n = y.ndim - 1
    return tuple(PERIOD / s for s in y.shape[:n]) if spacing is None else tuple(spacing)


def graph_gradient(y, spacing=None):
    """d_i y^p indexed [i, p]."""
    h = _spacing(y, spacing)
    n = y.ndim - 1
    return np.stack([stencils.diff1(y, i, h[i]) for i in range(n)], axis=n)


def graph_hessian(y, spacing=None):
    h = _spacing(y, spacing)
    n = y.ndim - 1
    out = np.empty(y.shape[:n] + (n, n) + y.shape[n:])
    for i in range(n):
        out[(slice(None),) * n + (i, i)] = stencils.diff2(y, i, h[i])
        for j in range(i + 1, n):
            mixed = stencils.diff1(stencils.diff1(y, i, h[i]), j, h[j])
            out[(slice(None),) * n + (i, j)] = mixed
            out[(slice(None),) * n + (j, i)] = mixed
    return out


def metric_from_gradient(dy):
    n = dy.shape[-2]
    lam = dy[..., :n]  # d_i y^j for tangential components j <= n
    yij = np.einsum("...ip,...jp->...ij", dy, dy)
    return np.eye(n) + lam + np.swapaxes(lam, -1, -2) + yij


def graph_metric(y, spacing=None):
    """Exact induced metric of X0 + Y (no truncation)."""
    return metric_from_gradient(graph_gradient(np.asarray(y, float), spacing))


def truncated_inverse(dy):
    """delta^ij - d_i y^j - d_j y^i - y_ij: the first-order inverse."""
    n = dy.shape[-2]
    lam = dy[..., :n]
    yij = np.einsum("...ip,...jp->...ij", dy, dy)
    return np.eye(n) - lam - np.swapaxes(lam, -1, -2) - yij


def graph_rhs(y, spacing=None):
    dy = graph_gradient(y, spacing)
    g_inv = geo.compute_inverse_metric(metric_from_gradient(dy))
    return np.einsum("...ij,...ijp->...p", g_inv, graph_hessian(y, spacing))


def linear_rhs(y, spacing=None):
    """Flat wave operator: the linearization of graph_rhs at Y = 0."""
    d2 = graph_hessian(y, spacing)
    n = y.ndim - 1
    return sum(d2[(slice(None),) * n + (i, i)] for i in range(n))


def flat_dt(y, spacing=None, safety=0.25):
    """CFL step of the flat metric (g^ii = 1), shared by every eps of a sweep."""
    return safety * min(_spacing(y, spacing))


def graph_step(gs, dt, rhs=graph_rhs, accel=None):
    """One velocity-form leapfrog step; returns ``(state, acceleration)``."""
    a0 = rhs(gs.y, gs.spacing) if accel is None else accel
    y = gs.y + dt * gs.y_t + 0.5 * dt * dt * a0
    if not np.all(np.isfinite(y)):
        raise NonFiniteField("graph displacement became non-finite")
    a1 = rhs(y, gs.spacing)
    y_t = gs.y_t + 0.5 * dt * (a0 + a1)
    return replace(gs, y=y, y_t=y_t, t=gs.t + dt), a1


def evolve(gs, horizon, dt, rhs=graph_rhs, every=1):
    """Snapshots (t, y) from ``gs`` up to ``horizon`` at fixed dt."""
    n_steps = int(np.ceil(horizon / dt - 1e-12))
    snaps = [(gs.t, gs.y.copy())]
    acc = None
    for k in range(1, n_steps + 1):
        gs, acc = graph_step(gs, dt, rhs, acc)
        if k % every == 0 or k == n_steps:
            snaps.append((gs.t, gs.y.copy()))
    return gs, snaps


def grid_coords(n_points, n=1):
    axes = [PERIOD * np.arange(n_points) / n_points] * n
    return np.meshgrid(*axes, indexing="ij")


def profile(name, n_points, n=1):
    """Perturbation profiles with n+1 components on the periodic grid.

    ``sine`` couples a tangential and a normal sine mode (the tangential part
    is what makes the leading nonlinearity quadratic); ``height`` is a pure
    normal sine mode; ``bump`` is a periodic Gaussian bump in both slots.
    """
    xs = grid_coords(n_points, n)
    out = np.zeros(xs[0].shape + (n + 1,))
    if name == "sine":
        out[..., 0] = np.sin(xs[0])
        out[..., n] = np.prod([np.sin(x) for x in xs], axis=0)
    elif name == "height":
        out[..., n] = np.prod([np.sin(x) for x in xs], axis=0)
    elif name == "bump":
        r2 = sum((2.0 * np.sin(0.5 * (x - math.pi))) ** 2 for x in xs)
        out[..., 0] = np.exp(-r2)
        out[..., n] = np.exp(-r2)
    elif name == "zero":
        pass
    else:
        raise ValueError(f"unknown profile {name!r}")
    return out


@dataclass
class ScalingEntry:
    epsilon: float
    times: list
    sup_norm: list
    deviation: list
    verdict: str  # "ok", "large-gradient" or "blowup"


@dataclass
class ScalingReport:
    entries: list = field(default_factory=list)
    exponent: float = None
    epsilon_0: float = None  # largest eps that ran without incident (scheme- and horizon-dependent)

    def ratios(self):
        ok = [e for e in self.entries if e.verdict == "ok" and e.epsilon > 0]
        peaks = [max(e.deviation) for e in ok]
        return [p / q for p, q in zip(peaks, peaks[1:])]


def fit_exponent(scales, values):
    x, y = np.log(np.asarray(scales, float)), np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


def epsilon_scaling(x1, x2, eps_list, horizon, safety=0.25, every=1):
    """Deviation of Y_eps from eps times the linear solution, over an eps sweep.

    Every run shares the grid and the flat-metric dt, so the comparison with
    the linear evolution isolates the nonlinearity.  Runs whose gradient
    leaves the small-gradient regime are flagged and left out of the fit;
    blow-up or a degenerate metric is a report entry, not an error.
    """
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    dt = flat_dt(x1, safety=safety)
    lin0 = GraphState(x1, x2, 1.0)
    _, lin = evolve(lin0, horizon, dt, linear_rhs, every)
    report = ScalingReport()
    for eps in eps_list:
        gs = GraphState(eps * x1, eps * x2, eps)
        verdict = "ok"
        try:
            _, snaps = evolve(gs, horizon, dt, graph_rhs, every)
        except (MetricDegenerate, NonFiniteField, BlowUpDetected):
            report.entries.append(ScalingEntry(eps, [], [], [], "blowup"))
            continue
        times, sup, dev = [], [], []
        for (t, y), (_, yl) in zip(snaps, lin):
            times.append(t)
            sup.append(float(np.max(np.abs(y))))
            dev.append(float(np.max(np.abs(y - eps * yl))))
            if float(np.max(np.abs(graph_gradient(y)))) >= GRADIENT_LIMIT:
                verdict = "large-gradient"
        report.entries.append(ScalingEntry(eps, times, sup, dev, verdict))
    ok = [e for e in report.entries if e.verdict == "ok"]
    fit = [e for e in ok if e.epsilon > 0]
    if len(fit) >= 2:
        report.exponent = fit_exponent([e.epsilon for e in fit], [max(e.deviation) for e in fit])
    if ok:
        report.epsilon_0 = max(e.epsilon for e in ok)
    return report


def metric_consistency(y):
    """Relative gap between the graph metric and the general immersion metric."""
    y = np.asarray(y, float)
    g_graph = graph_metric(y)
    g_geo = geo.compute_metric(shapes.graph_immersion(y, PERIOD))
    return float(np.max(np.abs(g_graph - g_geo)) / np.max(np.abs(g_geo)))


def truncation_scaling(y_profile, scales):
    """||g^-1 - truncated inverse||_inf against ||grad Y||_inf over a family."""
    lam, rem = [], []
    for s in scales:
        dy = graph_gradient(s * np.asarray(y_profile, float))
        g_inv = geo.compute_inverse_metric(metric_from_gradient(dy))
        lam.append(float(np.max(np.abs(dy))))
        rem.append(float(np.max(np.abs(g_inv - truncated_inverse(dy)))))
    return lam, rem, fit_exponent(lam, rem)


def reduced_equation_scaling(y_profile, scales):
    """||g^ij d_ij Y - Lap Y||_inf against ||(grad Y, hess Y)||_inf."""
    lam, rem = [], []
    for s in scales:
        y = s * np.asarray(y_profile, float)
        lam_hat = max(float(np.max(np.abs(graph_gradient(y)))), float(np.max(np.abs(graph_hessian(y)))))
        lam.append(lam_hat)
        rem.append(float(np.max(np.abs(graph_rhs(y) - linear_rhs(y)))))
    return lam, rem, fit_exponent(lam, rem)
