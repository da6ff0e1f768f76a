"""Command-line front end: ``hmcf <experiment> --config FILE --set key=value``.

Exit codes: 0 finished, 2 collapse detected (outputs are still written),
3 curvature blow-up, 64 configuration error.
"""
import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from hmcf import config as cfgmod
from hmcf import flow, geometry as geo, identities, io, minkowski, radial, shapes, stability
from hmcf.errors import ConfigError

EXIT_OK, EXIT_COLLAPSE, EXIT_BLOWUP = 0, 2, 3


def build_immersion(cfg):
    n, n2 = cfg.n, cfg.n2
    if cfg.geometry == "circle":
        return shapes.circle(n, cfg.r0)
    if cfg.geometry == "ellipse":
        return shapes.ellipse(n, cfg.a, cfg.b)
    if cfg.geometry == "sphere_band":
        return shapes.sphere_band(n, n2 or 2 * n, cfg.r0, cfg.alpha_max)
    if cfg.geometry == "cylinder":
        return shapes.cylinder(n, n2 or n, cfg.r0, cfg.length)
    if cfg.geometry == "torus_band":
        return shapes.torus(n, n2 or n)
    if cfg.geometry == "flat_band":
        return shapes.flat_band(n, n2 or n, cfg.length, cfg.length)
    if cfg.geometry == "graph":
        return shapes.graph_immersion(cfg.epsilon * stability.profile(cfg.profile, n, cfg.domain_dim))
    raise ConfigError([f"geometry {cfg.geometry!r} is not supported"])


def initial_velocity(cfg, im):
    """r1 times the outward direction (radial for round shapes, -n otherwise)."""
    if cfg.r1 == 0.0:
        return np.zeros_like(im.points)
    if cfg.geometry in ("circle", "sphere_band", "cylinder"):
        return cfg.r1 * shapes.radial_unit(im)
    return -cfg.r1 * geo.build_cache(im, cfg.det_floor, with_grad_A=False).normal


def _out(cfg, name):
    return os.path.join(cfg.output_dir, name)


def _fmt(cfg, x):
    return io.format_value(x, cfg.precision)


def cmd_simulate(cfg):
    im = build_immersion(cfg)
    step_cfg = flow.StepperConfig(cfl_safety=cfg.cfl_safety, det_floor=cfg.det_floor, h_max=cfg.h_max)
    fs0 = flow.make_state(im, initial_velocity(cfg, im), cfg=step_cfg, deturck=cfg.deturck)
    center = None if cfg.geometry in ("flat_band", "graph") else shapes.centroid(im)
    res = flow.run(fs0, cfg.t_end, step_cfg, snapshot_every=cfg.snapshot_every, center=center)
    io.write_trajectory_csv(_out(cfg, "trajectory.csv"), res.snapshots, cfg.precision)
    io.write_mesh_snapshot(_out(cfg, "mesh_final.txt"), res.final.immersion)
    lo, hi = res.bracket if res.bracket else (res.t_event, res.t_event)
    io.write_csv(_out(cfg, "summary.csv"), ("event", "t_event", "t_lo", "t_hi", "steps"),
                 [(res.event, float(res.t_event), float(lo), float(hi), res.final.step)], cfg.precision)
    print(f"{res.event} at t={_fmt(cfg, res.t_event)} after {res.final.step} steps"
          + (f", bracket [{_fmt(cfg, lo)}, {_fmt(cfg, hi)}]" if res.bracket else ""))
    return {"finished": EXIT_OK, "collapse": EXIT_COLLAPSE, "blowup": EXIT_BLOWUP}[res.event]


def cmd_oracle(cfg):
    traj = radial.integrate_radial(radial.RadialState(cfg.r0, cfg.r1, 0.0, cfg.c), cfg.t_end, cfg.ode_tol)
    t_quad = radial.collapse_time_quadrature(cfg.r0, cfg.r1, cfg.c)
    info = radial.classify_lemma31(cfg.r0, cfg.r1, cfg.c)
    rows = [("t_collapse_quadrature", t_quad),
            ("first_integral_drift", float(np.max(np.abs(traj.first_integral())))),
            ("sign_changes", float(traj.sign_changes()))]
    if traj.t_collapse is not None:
        rows.insert(0, ("t_collapse_ode", traj.t_collapse))
    if info.r_max is not None:
        rows += [("t_max", info.t_max), ("r_max", info.r_max)]
    io.write_csv(_out(cfg, "oracle.csv"), ("quantity", "value"),
                 [(k, float(v)) for k, v in rows], cfg.precision)
    io.write_csv(_out(cfg, "radial.csv"), ("t", "r", "r_t"),
                 [tuple(map(float, x)) for x in zip(traj.t, traj.r, traj.r_t)], cfg.precision)
    print(f"phase {info.phase.value}; collapse time {_fmt(cfg, t_quad)} (quadrature)")
    for k, v in rows:
        print(f"  {k} = {_fmt(cfg, v)}")
    return EXIT_COLLAPSE if traj.event == "collapse" else EXIT_OK


def cmd_verify(cfg):
    reports = identities.refinement_study(cfg.context, cfg.levels)
    rows = []
    for rep in reports:
        order = rep.estimated_order
        for n, dt, res in zip(rep.grid_levels, rep.dts, rep.residual_norms):
            rows.append((rep.identity_id, n, float(dt), float(res), float("nan") if order is None else order))
        print(f"{rep.identity_id}: order {order if order is None else round(order, 3)}"
              + (" (exact to roundoff)" if rep.at_roundoff else ""))
    io.write_csv(_out(cfg, "residuals.csv"), ("identity_id", "N", "dt", "residual", "order"), rows,
                 cfg.precision)
    return EXIT_OK


def cmd_minkowski(cfg):
    im = build_immersion(cfg)
    profile = initial_velocity(replace(cfg, r1=-1.0), im)  # inward unit speed
    eps = sorted(set(cfg.eps_list), reverse=True)
    lc = minkowski.limit_comparison(im, profile, eps, cfg.t_end, safety=cfg.cfl_safety)
    rows = []
    for e, curve in zip(lc.eps, lc.curves):
        rows += [(float(e), float(t), float(d), lc.exponent) for t, d in zip(lc.times, curve)]
    io.write_csv(_out(cfg, "minkowski.csv"), ("eps", "t", "discrepancy", "exponent"), rows, cfg.precision)
    sc = minkowski.rhs_scaling(im, profile, [e for e in eps if e > 0])
    io.write_csv(_out(cfg, "rhs_scaling.csv"), ("eps", "discrepancy", "exponent"),
                 [(float(e), float(d), sc.exponent) for e, d in zip(sc.eps, sc.discrepancy)], cfg.precision)
    print(f"trajectory exponent {_fmt(cfg, lc.exponent)}; right-hand-side exponent {_fmt(cfg, sc.exponent)}")
    return EXIT_OK


def cmd_stability(cfg):
    x1 = stability.profile(cfg.profile, cfg.n, cfg.domain_dim)
    rep = stability.epsilon_scaling(x1, np.zeros_like(x1), cfg.eps_list, cfg.horizon,
                                    safety=cfg.cfl_safety, every=cfg.snapshot_every)
    rows = []
    for e in rep.entries:
        if not e.times:
            rows.append((float(e.epsilon), float("nan"), float("nan"), float("nan"), e.verdict))
        rows += [(float(e.epsilon), float(t), float(s), float(d), e.verdict)
                 for t, s, d in zip(e.times, e.sup_norm, e.deviation)]
    io.write_csv(_out(cfg, "stability.csv"), ("eps", "t", "sup_norm", "deviation", "verdict"), rows,
                 cfg.precision)
    print(f"deviation exponent {rep.exponent if rep.exponent is None else _fmt(cfg, rep.exponent)}; "
          f"empirical eps_0 {rep.epsilon_0} (horizon {cfg.horizon}, scheme dependent)")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "oracle": cmd_oracle, "verify": cmd_verify,
            "minkowski": cmd_minkowski, "stability": cmd_stability}


def build_parser():
    p = argparse.ArgumentParser(prog="hmcf", description="Hyperbolic mean curvature flow laboratory.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config, [f"experiment={args.command}", *args.set])
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return ConfigError.exit_code
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
