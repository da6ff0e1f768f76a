"""Radial reductions r_tt = -c/r of the flow for round shapes.

c = 1 for circles and cylinders, c = 2 for spheres.  Two independent routes
give the collapse time: an adaptive Dormand-Prince 5(4) integration with
event location, and a quadrature of the first integral

    r_t^2 = r_1^2 + 2c ln(r_0 / r)

after the substitution u = sqrt(ln(r_ref / r)) that removes the endpoint
singularity at r = 0.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from hmcf.errors import DomainError

R_STOP_FACTOR = 1e-6
LOCAL_SAFETY = 0.05

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array(_A[6] + (0.0,))
_B4 = np.array((5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40))


@dataclass(frozen=True)
class RadialState:
    r: float
    r_t: float
    t: float = 0.0
    c: float = 1.0


class Phase(enum.Enum):
    MONOTONE_COLLAPSE = "MonotoneCollapse"
    EXPAND_THEN_COLLAPSE = "ExpandThenCollapse"


@dataclass(frozen=True)
class PhaseInfo:
    phase: Phase
    t_max: float = None
    r_max: float = None


@dataclass
class RadialTrajectory:
    t: np.ndarray
    r: np.ndarray
    r_t: np.ndarray
    c: float
    event: str  # "finished" or "collapse"
    t_collapse: float = None
    bracket: tuple = None
    samples: dict = field(default_factory=dict)

    @property
    def r0(self):
        return float(self.r[0])

    @property
    def r1(self):
        return float(self.r_t[0])

    def first_integral(self):
        return self.r_t ** 2 + 2.0 * self.c * np.log(self.r / self.r0) - self.r1 ** 2

    def sign_changes(self):
        s = np.sign(self.r_t)
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))


def radial_rhs(s):
    if not s.r > 0:
        raise DomainError(f"radius must be positive, got {s.r!r}")
    return -s.c / s.r


def _f(y, c):
    if not y[0] > 0:
        raise DomainError("radius left the domain")
    return np.array([y[1], -c / y[0]])


def _dopri_step(y, h, c, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(_f(yi, c))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks))
    y4 = y + h * sum(b * k for b, k in zip(_B4, ks))
    return y5, y5 - y4, ks[-1]


def integrate_radial(s0, t_end, tol=1e-10, r_stop=None, t_eval=()):
    """Adaptive 5(4) integration of r_tt = -c/r from ``s0`` up to ``t_end``.

    Stops early at the collapse event r = r_stop (default 1e-6 r0), located by
    bisection on the step length of the Runge-Kutta map from the last
    accepted point.  ``t_eval`` times are hit exactly and returned in
    ``samples`` as ``t -> (r, r_t)``.
    """
    if not s0.r > 0:
        raise DomainError("r0 must be positive")
    if not (1e-14 < tol < 1e-3):
        raise DomainError(f"tol must lie in (1e-14, 1e-3), got {tol!r}")
    if not s0.c > 0:
        raise DomainError("curvature coefficient c must be positive")
    c = float(s0.c)
    r_stop = R_STOP_FACTOR * s0.r if r_stop is None else r_stop
    stops = sorted(float(te) for te in t_eval if s0.t < te <= t_end)
    t = float(s0.t)
    y = np.array([s0.r, s0.r_t], dtype=np.float64)
    k1 = _f(y, c)
    ts, rs, vs = [t], [y[0]], [y[1]]
    samples = {}
    h = min(1e-3 * s0.r, t_end - t) if t_end > t else 0.0
    err_prev = 1.0
    event = "finished"
    t_col = bracket = None

    while t < t_end:
        target = stops[0] if stops else t_end
        h = min(h, target - t)
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            if target - t <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                t = target
                if stops:
                    samples[stops.pop(0)] = (y[0], y[1])
                continue
            # the stiff approach to r = 0 starves the step size
            event, t_col, bracket = "collapse", t, (t, t + h)
            break
        try:
            y_new, err_vec, k_last = _dopri_step(y, h, c, k1)
            # relative control on r (the log term needs it near r = 0); the
            # local target tol/20 keeps the accumulated first-integral drift
            # under 10 tol
            scale = LOCAL_SAFETY * tol * np.array(
                [max(abs(y[0]), abs(y_new[0])), 1.0 + max(abs(y[1]), abs(y_new[1]))])
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        except DomainError:
            err = np.inf
        if not err <= 1.0:
            h *= 0.2 if not np.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            continue
        if y_new[0] < r_stop:
            lo, hi = 0.0, h
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                r_mid = _dopri_step(y, mid, c, k1)[0][0] if mid > 0 else y[0]
                if r_mid > r_stop:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 4 * np.finfo(float).eps * max(1.0, t):
                    break
            y_ev = _dopri_step(y, lo, c, k1)[0] if lo > 0 else y
            t_col = t + lo
            bracket = (t + lo, t + hi)
            ts.append(t_col)
            rs.append(y_ev[0])
            vs.append(y_ev[1])
            event = "collapse"
            break
        t = t + h
        y, k1 = y_new, k_last
        ts.append(t)
        rs.append(y[0])
        vs.append(y[1])
        if stops and t >= stops[0]:
            samples[stops.pop(0)] = (y[0], y[1])
        err = max(err, 1e-10)
        fac = 0.9 * err ** (-0.7 / 5) * err_prev ** (0.4 / 5)
        h *= min(5.0, max(0.2, fac))
        err_prev = err

    return RadialTrajectory(np.array(ts), np.array(rs), np.array(vs), c, event, t_col, bracket, samples)


def _check_args(r0, c):
    if not (np.isfinite(r0) and r0 > 0):
        raise DomainError(f"r0 must be positive and finite, got {r0!r}")
    if not (np.isfinite(c) and c > 0):
        raise DomainError(f"c must be positive and finite, got {c!r}")


def peak_radius(r0, r1, c=1.0):
    """r0 exp(r1^2 / 2c): the turning radius (virtual for r1 < 0)."""
    return r0 * math.exp(r1 * r1 / (2.0 * c))


def _gauss_integral(a, b, tol):
    val, _ = integrate.quad(lambda u: math.exp(-u * u), a, b, epsabs=tol, epsrel=tol, limit=200)
    return val


def collapse_time_quadrature(r0, r1, c=1.0, tol=1e-12):
    """Collapse time from the first integral.

    With u = sqrt(ln(r_peak / r)) each monotone branch becomes
    (2 r_peak / sqrt(2c)) * int exp(-u^2) du; the rising branch (r1 > 0)
    spans u in [0, u0] and the falling one u in [0, inf), while for r1 <= 0
    only u in [u0, inf) remains.
    """
    _check_args(r0, c)
    if not np.isfinite(r1):
        raise DomainError("r1 must be finite")
    r_peak = peak_radius(r0, r1, c)
    u0 = abs(r1) / math.sqrt(2.0 * c)
    pref = 2.0 * r_peak / math.sqrt(2.0 * c)
    fall = _gauss_integral(0.0, np.inf, tol)
    partial = _gauss_integral(0.0, u0, tol) if u0 > 0 else 0.0
    return pref * (fall + partial if r1 > 0 else fall - partial)


def classify_lemma31(r0, r1, c=1.0):
    """Monotone collapse iff r1 <= 0; otherwise the time and size of the peak."""
    _check_args(r0, c)
    if r1 <= 0:
        return PhaseInfo(Phase.MONOTONE_COLLAPSE)
    r_peak = peak_radius(r0, r1, c)
    u0 = r1 / math.sqrt(2.0 * c)
    t_peak = 2.0 * r_peak / math.sqrt(2.0 * c) * _gauss_integral(0.0, u0, 1e-13)
    return PhaseInfo(Phase.EXPAND_THEN_COLLAPSE, t_peak, r_peak)


def radial_samples(r0, r1, c, times, tol=1e-12):
    """(r, r_t) of the exact radial solution at the requested times."""
    times = [float(t) for t in times]
    traj = integrate_radial(RadialState(r0, r1, 0.0, c), max(times), tol, t_eval=times)
    out = []
    for t in times:
        if t == 0.0:
            out.append((r0, r1))
        elif t in traj.samples:
            out.append(traj.samples[t])
        else:
            raise DomainError(f"radial solution collapsed before t={t}")
    return np.array(out)
