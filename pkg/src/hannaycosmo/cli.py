"""Command-line front end.

Subcommands: hannay, geometry verify, fixed-points, portrait, scan, gp, spin.
Summaries are JSON (sorted keys, 17 significant digits) on stdout or
``--out``; time series go to CSV files under ``--out-dir``.

Exit codes: 0 pass, 1 criterion failure, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import dynamics as dyn
from . import fixed_points as fpm
from . import gp
from . import hannay as hn
from . import serialize
from . import verify
from .errors import DiscretizationError, DomainError, IntegrationError
from .integrate import Tolerances
from .model import ModelParams, PhaseState, SpinState, phase_to_spin

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line or configuration input."""


def _criterion(value, tolerance, passed=None):
    ok = bool(value <= tolerance) if passed is None else bool(passed)
    return {"value": value, "tolerance": tolerance, "pass": ok}


def _report(name, args, results, criteria, extra=None):
    rep = {
        "subcommand": name,
        "inputs": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "config", "out", "out_dir", "timing")},
        "results": results,
        "criteria": criteria,
        "passed": all(c["pass"] for c in criteria.values()),
    }
    if extra:
        rep.update(extra)
    return rep


def _params(args) -> ModelParams:
    return ModelParams(delta=args.delta, epsilon=args.eps, alpha=args.alpha, beta=args.beta, gamma=args.gamma)


def _tolerances(args) -> Tolerances | None:
    if args.rel_tol is None and args.abs_tol is None:
        return None
    return Tolerances(rel_tol=args.rel_tol or 1e-10, abs_tol=args.abs_tol or 1e-12)


def _out_path(args, filename):
    if not args.out_dir:
        return None
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, filename)


def _fixed_point_rows(fps):
    return [{"p_bar": fp.p_bar, "theta_bar": fp.theta_bar, "kind": fp.kind, "stability": fp.stability,
             "omega_or_lyapunov": fp.omega_or_lyapunov, "residual": fp.residual} for fp in fps]


# ------------------------------------------------------------ subcommands

def _load_loop(args) -> hn.ParameterLoop:
    if args.loop_json:
        with open(args.loop_json, encoding="utf-8") as fh:
            spec = json.load(fh)
    elif args.loop == "cap":
        spec = {"kind": "cap", "psi0": args.psi0, "scale": args.scale}
    else:
        raise InputError(f"--loop {args.loop} needs --loop-json with its points or coefficients")
    spec.setdefault("orientation", args.orientation)
    return hn.ParameterLoop.from_json(spec)


def cmd_hannay(args):
    loop = _load_loop(args).validate()
    res = hn.adiabatic_run(loop, args.loop_time, tuple(args.state), _tolerances(args), args.profile,
                           keep_trajectory=bool(args.out_dir))
    area = res.hannay_area
    ode_err = abs(res.hannay_ode - area)
    criteria = {
        "ode_vs_area": _criterion(ode_err, args.ode_tol * abs(area) + args.abs_floor),
        "form_vs_area": _criterion(abs(res.hannay_form - area), args.geo_tol),
    }
    results = {k: getattr(res, k) for k in ("theta_total", "dynamical_phase", "hannay_ode", "hannay_form",
                                            "hannay_area", "action_drift", "loop_time", "steps")}
    results["winding_number"] = hn.winding_number(loop)
    if args.convergence:
        study = hn.convergence_study(loop, args.convergence, tuple(args.state), args.profile, _tolerances(args))
        results["convergence"] = {"loop_times": study.loop_times, "hannay_ode": study.hannay_ode,
                                  "errors": study.errors, "action_drift": study.action_drift,
                                  "slope": study.slope}
        criteria["convergence_slope"] = _criterion(study.slope, args.min_slope, study.slope >= args.min_slope)
        criteria["error_monotone"] = _criterion(float(study.error_monotone), 1.0, study.error_monotone)
        criteria["drift_monotone"] = _criterion(float(study.drift_monotone), 1.0, study.drift_monotone)
    path = _out_path(args, "hannay_trajectory.csv")
    if path:
        tr = res.trajectory
        serialize.write_csv(path, ("t", "q", "p", "theta", "action"),
                            zip(tr["t"], tr["q"], tr["p"], tr["theta"], tr["action"]))
    return _report("hannay", args, results, criteria)


def cmd_geometry(args):
    checks = verify.geometry_sweep(args.seed, args.points, args.inject_fault)
    criteria = {c.name: {"max_residual": c.residual, "tolerance": c.tolerance, "pass": c.passed,
                         "samples": c.samples} for c in checks}
    return _report("geometry", args, {"checks": len(checks)}, criteria)


def cmd_fixed_points(args):
    params = _params(args)
    fps = fpm.all_fixed_points(params)
    worst = max((fp.residual for fp in fps), default=0.0)
    criteria = {"max_residual": _criterion(worst, fpm.RESIDUAL_TOL, worst < fpm.RESIDUAL_TOL)}
    path = _out_path(args, "fixed_points.csv")
    rows = _fixed_point_rows(fps)
    if path:
        keys = ("p_bar", "theta_bar", "kind", "stability", "omega_or_lyapunov", "residual")
        serialize.write_csv(path, keys, ([r[k] for k in keys] for r in rows))
    return _report("fixed-points", args, {"params": params, "fixed_points": rows}, criteria)


def cmd_portrait(args):
    params = _params(args)
    portrait = dyn.classify_phase_portrait(params, args.levels, n_meridians=args.meridians,
                                           t_max=args.t_max, dt=args.dt)
    path = _out_path(args, "portrait.csv")
    if path:
        def rows():
            curves = [("separatrix", math.nan, s) for s in portrait.separatrices]
            curves += [("orbit", o.energy, o.spin) for o in portrait.orbits]
            for i, (kind, energy, pts) in enumerate(curves):
                for sx, sy, sz in pts:
                    yield (i, kind, energy, sx, sy, sz, sz, math.atan2(sy, sx))
        serialize.write_csv(path, ("curve", "kind", "energy", "sx", "sy", "sz", "p", "theta"), rows())
    results = {
        "fixed_points": _fixed_point_rows(portrait.fixed_points),
        "separatrix_levels": portrait.separatrix_levels,
        "separatrix_branches": len(portrait.separatrices),
        "orbits": [{"energy": o.energy, "closed": o.closed, "samples": len(o.spin)} for o in portrait.orbits],
        "region_count": portrait.region_count,
    }
    closed = all(o.closed for o in portrait.orbits)
    criteria = {"orbits_closed": _criterion(float(closed), 1.0, closed)}
    if args.expect_regions is not None:
        criteria["region_count"] = _criterion(float(abs(portrait.region_count - args.expect_regions)), 0.0)
    return _report("portrait", args, results, criteria)


def _range(text):
    if ":" in text:
        lo, hi = text.split(":")
        return (float(lo), float(hi))
    return float(text)


def cmd_scan(args):
    region = {"alpha": _range(args.alpha), "beta": _range(args.beta), "gamma": _range(args.gamma)}
    scan = fpm.critical_surface_scan(region, args.resolution, args.zero_tol)
    zs = scan.zero_set
    worst = float(np.max(np.abs(zs[:, 0] * zs[:, 2] - zs[:, 1] ** 2))) if len(zs) else 0.0
    # linear interpolation error of a product is bounded by the cell size squared
    tol = scan.cell_diagonal ** 2 + args.zero_tol
    path = _out_path(args, "scan.csv")
    if path:
        serialize.write_csv(path, ("alpha", "beta", "gamma", "omega_sq", "on_surface"), scan.rows())
        serialize.write_csv(_out_path(args, "zero_set.csv"), ("alpha", "beta", "gamma"), zs)
    results = {"axes": scan.axes, "zero_points": int(len(zs)), "on_surface_nodes": int(scan.on_surface.sum()),
               "max_zero_residual": worst}
    return _report("scan", args, results, {"zero_set_residual": _criterion(worst, tol)})


def cmd_gp(args):
    if not args.input:
        raise InputError("gp needs --input <geometry.json>")
    with open(args.input, encoding="utf-8") as fh:
        spec = json.load(fh)
    build = gp.model_from_geometry(spec)
    results = {"params": build.params, "overlaps": build.overlaps, "provenance": build.provenance}
    return _report("gp", args, results, {})


def cmd_spin(args):
    params = _params(args)
    state = PhaseState(args.p0, args.theta0)
    tol = _tolerances(args) or Tolerances(rel_tol=1e-12, abs_tol=1e-14)
    traj = dyn.integrate("spin", phase_to_spin(state), params, (0.0, args.t_max), tol, n_samples=args.samples)
    norm = dyn.conservation_report(traj, "norm")
    energy = dyn.conservation_report(traj, "energy")
    criteria = {"norm_drift": _criterion(norm.max_abs, args.drift_tol),
                "energy_drift": _criterion(energy.max_abs, args.drift_tol)}
    results = {"norm_drift": norm.max_abs, "energy_drift": energy.max_abs, "initial_energy": energy.initial,
               "steps": traj.stats.steps}
    if args.compare_phase:
        eq = dyn.equivalence_check(state, params, (0.0, min(args.t_max, 100.0)), tol)
        results["phase_vs_spin"] = {"max_deviation": eq.max_deviation, "t_reached": eq.t_reached,
                                    "complete": eq.complete}
        criteria["phase_vs_spin"] = _criterion(eq.max_deviation, 1e-7)
    path = _out_path(args, "spin_trajectory.csv")
    if path:
        serialize.write_csv(path, traj.header, traj.rows())
    return _report("spin", args, results, criteria)


# ------------------------------------------------------------ parser

def _add_params(p):
    for name in ("alpha", "beta", "gamma", "delta", "eps"):
        p.add_argument(f"--{name}", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hannaycosmo", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flat keys; its values override flags")
    common.add_argument("--out", help="write the JSON summary here instead of stdout")
    common.add_argument("--out-dir", help="directory for CSV outputs")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--timing", action="store_true", help="include wall time (breaks byte identity)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hannay", parents=[common], help="Hannay angle three ways")
    p.add_argument("--loop", choices=("cap", "keyframes", "fourier"), default="cap")
    p.add_argument("--loop-json", help="loop specification file")
    p.add_argument("--psi0", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--orientation", type=int, choices=(1, -1), default=1)
    p.add_argument("--loop-time", type=float, default=2000.0)
    p.add_argument("--state", type=float, nargs=2, default=(1.0, 0.0), metavar=("Q", "P"))
    p.add_argument("--profile", choices=("smooth", "linear"), default="smooth")
    p.add_argument("--convergence", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated loop times for a convergence study")
    p.add_argument("--ode-tol", type=float, default=0.02, help="relative tolerance of ODE vs area")
    p.add_argument("--abs-floor", type=float, default=1e-8)
    p.add_argument("--geo-tol", type=float, default=1e-6)
    p.add_argument("--min-slope", type=float, default=0.8)
    p.set_defaults(func=cmd_hannay)

    p = sub.add_parser("geometry", parents=[common], help="geometry identity sweeps")
    p.add_argument("action", choices=("verify",))
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--inject-fault", action="store_true", help="test hook: scale W by 1.01")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("fixed-points", parents=[common], help="fixed points and stability")
    _add_params(p)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("portrait", parents=[common], help="phase portrait on the Bloch sphere")
    _add_params(p)
    p.add_argument("--levels", type=lambda s: [float(x) for x in s.split(",")], default=[])
    p.add_argument("--meridians", type=int, default=12)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--expect-regions", type=int)
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("scan", parents=[common], help="critical surface alpha*gamma = beta^2")
    p.add_argument("--alpha", default="0.5:2")
    p.add_argument("--beta", default="1")
    p.add_argument("--gamma", default="0.5:2")
    p.add_argument("--resolution", type=int, default=41)
    p.add_argument("--zero-tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("gp", parents=[common], help="two-mode parameters from a double well")
    p.add_argument("--input")
    p.set_defaults(func=cmd_gp)

    p = sub.add_parser("spin", parents=[common], help="spin-flow run with drift diagnostics")
    _add_params(p)
    p.add_argument("--p0", type=float, default=0.3)
    p.add_argument("--theta0", type=float, default=0.4)
    p.add_argument("--t-max", type=float, default=1000.0)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--drift-tol", type=float, default=1e-9)
    p.add_argument("--compare-phase", action="store_true")
    p.set_defaults(func=cmd_spin)
    return parser


def _apply_config(args):
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object of flat keys")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"unknown config key {key!r}")
        setattr(args, attr, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        args = _apply_config(args)
        report = args.func(args)
    except (InputError, DomainError, DiscretizationError, OSError, json.JSONDecodeError,
            KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.timing:
        report["wall_time"] = time.perf_counter() - start
    text = serialize.dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
