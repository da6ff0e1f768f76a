import math

import numpy as np
import pytest

from hmcf import flow, geometry as geo, radial, shapes
from hmcf.errors import CollapseDetected, DiffeoDegenerate, MetricDegenerate

T0_CIRCLE = math.sqrt(math.pi / 2)
T0_SPHERE = radial.collapse_time_quadrature(1.0, 0.0, 2.0)


def radius_error(res, im, c, every=1):
    """Max relative radius error against the radial solution over snapshots."""
    dim = im.points.shape[-1]
    snaps = res.snapshots[::every]
    exact = radial.radial_samples(1.0, 0.0, c, [s.t for s in snaps])[:, 0]
    errs = [np.max(np.abs(shapes.radii(im.with_points(s.points), np.zeros(dim))[im.interior] - r)) / r
            for s, r in zip(snaps, exact)]
    return max(errs)


def test_rhs_examples():
    c = geo.build_cache(shapes.sphere_band(64, 128))
    acc = flow.flow_rhs(c)
    radial_unit = shapes.radial_unit(c.immersion, np.zeros(3))
    I = c.immersion.interior
    assert np.allclose(acc[I], -2.0 * radial_unit[I], atol=2e-3)
    c = geo.build_cache(shapes.circle(256))
    assert np.allclose(flow.flow_rhs(c), -shapes.radial_unit(c.immersion), atol=2e-4)
    c = geo.build_cache(shapes.flat_band(16, 16))
    assert np.max(np.abs(flow.flow_rhs(c))) < 1e-12


def test_rhs_debug_returns_laplacian():
    c = geo.build_cache(shapes.torus(32, 32))
    assert np.allclose(flow.flow_rhs(c, debug=True), flow.flow_rhs(c), atol=1e-11)


def test_cfl_examples():
    c = geo.build_cache(shapes.circle(64))
    d = 2 * np.pi / 64
    s1 = np.sin(d) / d  # centered stencils shrink |X'| by sin(d)/d
    assert math.isclose(flow.cfl_dt(c), 0.25 * d * s1, rel_tol=1e-12)
    assert abs(flow.cfl_dt(c) - 0.02454) < 1e-4
    im = shapes.cylinder(64, 63, r=2.0, length=6.3)
    c = geo.build_cache(im)
    da, dz = im.spacing
    assert math.isclose(flow.cfl_dt(c), 0.25 * min(da * 2.0 * np.sin(da) / da, dz), rel_tol=1e-9)
    unit = geo.build_cache(shapes.circle(64))
    small = geo.build_cache(shapes.circle(64, r=0.1))
    assert math.isclose(flow.cfl_dt(small), 0.1 * flow.cfl_dt(unit), rel_tol=1e-12)


def test_circle_collapse_time():
    res = flow.run(flow.make_state(shapes.circle(256)), 2.0, snapshot_every=0)
    assert res.event == "collapse"
    lo, hi = res.bracket
    assert lo <= hi and abs(res.t_event - T0_CIRCLE) <= 0.01


def test_collapse_raised_by_step():
    im = shapes.circle(32, r=0.01)
    fs = flow.make_state(im, -0.5 * shapes.radial_unit(im), cfg=flow.StepperConfig(det_floor=1e-6))
    with pytest.raises((CollapseDetected, MetricDegenerate)):
        for _ in range(1000):
            fs = flow.step(fs, flow.StepperConfig(det_floor=1e-6))


@pytest.mark.slow
def test_circle_tracks_radial_solution_at_256():
    im = shapes.circle(256)
    res = flow.run(flow.make_state(im), 0.9 * T0_CIRCLE, snapshot_every=10)
    assert radius_error(res, im, 1.0) <= 1e-3


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="N=128 circle error is 2.1e-3: the stencil curvature "
                   "offset of order dtheta^2/4 accumulates near collapse; the bound is met from N=256")
def test_circle_tracks_radial_solution_at_128():
    im = shapes.circle(128)
    res = flow.run(flow.make_state(im), 0.9 * T0_CIRCLE, snapshot_every=5)
    assert radius_error(res, im, 1.0) <= 1e-3


def test_sphere_band_tracks_radial_solution_coarse():
    im = shapes.sphere_band(32, 64)
    res = flow.run(flow.make_state(im), 0.9 * T0_SPHERE, snapshot_every=4)
    assert radius_error(res, im, 2.0) <= 1e-2


@pytest.mark.parametrize("mk,c,t0", [(lambda n: shapes.circle(n), 1.0, T0_CIRCLE),
                                     (lambda n: shapes.sphere_band(n, 2 * n), 2.0, T0_SPHERE)])
def test_second_order_convergence(mk, c, t0):
    errs = []
    for n in (32, 64, 128):
        im = mk(n)
        fin = flow.run(flow.make_state(im), 0.5 * t0, snapshot_every=0).final
        r = shapes.radii(fin.immersion, np.zeros(im.points.shape[-1]))[im.interior]
        exact = radial.radial_samples(1.0, 0.0, c, [fin.t])[0, 0]
        errs.append(np.max(np.abs(r - exact)) / exact)
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios >= 3.5) & (ratios <= 4.5))


@pytest.mark.parametrize("im,t0", [(shapes.circle(64), T0_CIRCLE), (shapes.sphere_band(32, 64), T0_SPHERE)])
def test_rotational_symmetry_kept(im, t0):
    v = -0.2 * shapes.radial_unit(im, np.zeros(im.points.shape[-1]))
    res = flow.run(flow.make_state(im, v), 0.9 * radial.collapse_time_quadrature(1.0, -0.2, 1.0 if im.dim_domain == 1 else 2.0),
                   center=np.zeros(im.points.shape[-1]))
    assert max(s.diagnostics["r_spread"] for s in res.snapshots) <= 1e-9


def test_outward_velocity_rises_then_falls():
    im = shapes.circle(64)
    res = flow.run(flow.make_state(im, 0.5 * shapes.radial_unit(im)), 5.0, center=np.zeros(2))
    r = np.array([s.diagnostics["r_mean"] for s in res.snapshots])
    k = int(np.argmax(r))
    assert 0 < k < len(r) - 1
    assert abs(r[k] - math.exp(0.125)) <= 5e-3
    assert res.event == "collapse"


@pytest.mark.parametrize("r1", [-0.5, 0.0, 0.5])
def test_phase_matches_radial_classification(r1):
    im = shapes.circle(64)
    res = flow.run(flow.make_state(im, r1 * shapes.radial_unit(im)), 5.0, center=np.zeros(2))
    r = np.array([s.diagnostics["r_mean"] for s in res.snapshots])
    d = np.sign(np.diff(r))
    d = d[d != 0]
    changes = int(np.count_nonzero(d[1:] != d[:-1]))
    phase = radial.classify_lemma31(1.0, r1).phase
    assert changes == (1 if phase is radial.Phase.EXPAND_THEN_COLLAPSE else 0)


def test_flat_band_stays_put():
    im = shapes.flat_band(16, 16)
    res = flow.run(flow.make_state(im), 1.0)
    assert res.event == "finished"
    assert np.max(np.abs(res.final.immersion.points - im.points)) <= 1e-12


def test_cylinder_collapses_to_axis():
    im = shapes.cylinder(64, 16, r=1.0, length=3.0)
    res = flow.run(flow.make_state(im), 3.0, snapshot_every=0)
    assert res.event == "collapse"
    assert abs(res.t_event - T0_CIRCLE) < 0.05
    pts = res.final.immersion.points
    assert np.max(np.hypot(pts[..., 0], pts[..., 1])) < 0.05
    assert np.allclose(pts[..., 2], im.points[..., 2], atol=1e-12)


def test_reverse_check():
    assert flow.reverse_check(flow.make_state(shapes.circle(64)), 0) == 0.0
    assert flow.reverse_check(flow.make_state(shapes.circle(64)), 50) <= 1e-8
    assert flow.reverse_check(flow.make_state(shapes.flat_band(16, 16)), 20) <= 1e-13


def test_velocity_consistency():
    """V^n and (X^n - X^{n-1})/dt + dt/2 F^n agree (velocity Verlet identity)."""
    fs = flow.make_state(shapes.ellipse(64))
    for _ in range(5):
        fs = flow.step(fs)
    dt = fs.dt_current
    recon = (fs.immersion.points - fs.prev_immersion.points) / dt + 0.5 * dt * fs.acceleration
    assert np.allclose(fs.velocity, recon, atol=1e-12)


def test_three_level_form_at_fixed_dt():
    cfg = flow.StepperConfig(fixed_dt=0.01)
    fs = flow.make_state(shapes.ellipse(64), cfg=cfg)
    xs, fs_list = [fs.immersion.points], [fs]
    for _ in range(3):
        fs = flow.step(fs, cfg)
        xs.append(fs.immersion.points)
        fs_list.append(fs)
    lhs = xs[3] - 2 * xs[2] + xs[1]
    assert np.allclose(lhs, 0.01 ** 2 * fs_list[2].acceleration, atol=1e-13)
    first = xs[0] + 0.5 * 0.01 ** 2 * fs_list[0].acceleration
    assert np.allclose(xs[1], first, atol=1e-15)


def test_snapshot_callback_receives_copies():
    seen = []
    res = flow.run(flow.make_state(shapes.circle(32)), 0.1, snapshot_every=2, callback=seen.append)
    assert len(seen) == len(res.snapshots) >= 2
    seen[0].points[:] = 0
    assert np.max(np.abs(res.final.immersion.points)) > 0.5


def test_deturck_identity_on_circle_and_cylinder():
    for im in (shapes.circle(64), shapes.cylinder(32, 16, 1.0, 3.0)):
        fs = flow.make_state(im, deturck=True)
        y0 = fs.deturck.y.copy()
        assert np.max(np.abs(fs.deturck.y_tt)) < 1e-12
        res = flow.run(fs, 0.9 * T0_CIRCLE, snapshot_every=0)
        assert np.max(np.abs(res.final.deturck.y - y0)) <= 1e-8


def test_deturck_flat_band_static():
    fs = flow.make_state(shapes.flat_band(16, 16), deturck=True)
    res = flow.run(fs, 1.0, snapshot_every=0)
    assert np.max(np.abs(res.final.deturck.y - fs.deturck.y)) < 1e-13


def test_deturck_zero_at_start_on_torus():
    fs = flow.make_state(shapes.torus(32, 32), deturck=True)
    assert np.max(np.abs(fs.deturck.y_tt)) < 1e-10


def test_deturck_moves_on_ellipse_and_detects_folds():
    fs = flow.make_state(shapes.ellipse(64), deturck=True)
    for _ in range(20):
        fs = flow.step(fs)
    assert np.max(np.abs(fs.deturck.y_t)) > 1e-6
    fs.deturck.y = fs.deturck.y[::-1].copy()
    with pytest.raises(DiffeoDegenerate):
        flow.deturck_rhs(fs.deturck, fs.cache)


def test_deturck_needs_periodic_domain():
    with pytest.raises(ValueError):
        flow.make_state(shapes.sphere_band(16, 32), deturck=True)
