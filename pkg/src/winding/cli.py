"""Command-line entry point: ``winding <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import constants as C
from . import harness as H
from .config import RunConfig, load_config
from .errors import WindingError
from .montecarlo import WalkerConfig, estimate
from .operator import validate_ellipticity
from .solver import StripGrid, cross_profiles, solve_problem

CONSTANT_KEYS = ("eta_star", "nu", "C_star", "nu_prime", "C_star_prime", "d_star", "d_hat", "s",
                 "theta_star", "k_star", "K0", "K1", "nu_bar", "Theta0")


def _dump(obj) -> str:
    return json.dumps(obj, default=H._json_default, sort_keys=False)


def collect_constants(rc: RunConfig, theta_star: Optional[float] = None,
                      optimize_d_star: bool = False) -> dict:
    """Every constant bundle for a config as a flat dict; NaN where a bundle does not apply."""
    spec = rc.domain()
    ell = validate_ellipticity(rc.field, spec, kappa=rc.kappa)
    out = {k: math.nan for k in CONSTANT_KEYS}
    if ell.bounded:
        gc = C.annulus_constants(spec, ell, theta_star=theta_star, optimize_d_star=optimize_d_star)
        out.update({k: getattr(gc, k) for k in CONSTANT_KEYS if hasattr(gc, k)})
        kc = C.inhomogeneous_constants(spec, ell, theta_max=rc.theta_max)
        out.update(K0=kc.K0, K1=kc.K1)
        # the constant-drift case seen through the unbounded construction
        ell_m = C.EllipticityData(ell.c0, ell.M1, m=C.DriftGrowth("const", ell.M2),
                                  kappa=0.5 if rc.kappa is None else rc.kappa)
        try:
            uc = C.unbounded_constants(spec, ell_m, gc.theta_star)
            out.update(nu_bar=uc.nu_bar, Theta0=uc.Theta0)
        except WindingError:
            pass
    else:
        ts = theta_star if theta_star is not None else H.choose_unbounded_theta_star(spec, ell)
        uc = C.unbounded_constants(spec, ell, ts)
        out.update(nu_bar=uc.nu_bar, Theta0=uc.Theta0, theta_star=ts, k_star=spec.k_star)
    return out


def _cmd_geometry(args) -> int:
    rc = load_config(args.config)
    spec = rc.domain()
    summ = spec.summary()
    for k, v in summ.items():
        print(f"{k}={v}")
    print(_dump(summ))
    return 0


def _cmd_constants(args) -> int:
    rc = load_config(args.config)
    out = collect_constants(rc, args.theta_star, args.optimize_d_star)
    for k in CONSTANT_KEYS:
        print(f"{k}={out[k]!r}")
    print(_dump(out))
    return 0


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{float(v):.17g}" for v in r])


def _cmd_solve(args) -> int:
    rc = load_config(args.config)
    tmax = rc.theta_max if args.theta_max is None else args.theta_max
    spec = rc.domain(tmax)
    nt = args.ntheta
    if nt is None:
        nt = int(math.ceil((tmax - spec.theta0) * 2.5 * (args.nlambda - 1))) + 1
    grid = StripGrid(args.nlambda, nt, spec.theta0, tmax)
    sol = solve_problem(rc.field, spec, grid, rc.boundary(args.far_data), scheme=args.scheme)
    prof = cross_profiles(sol)
    base, ext = os.path.splitext(args.out)
    prof_path = f"{base}_profiles{ext or '.csv'}"
    _write_rows(args.out, ("lambda", "theta", "x1", "x2", "u"), sol.records())
    _write_rows(prof_path, ("theta", "maxpos", "maxneg", "maxabs", "osc"), prof.rows())
    print(_dump({"nodes": grid.size, "residual": sol.residual, "out": args.out,
                 "profiles": prof_path, "flagged": int(np.sum(sol.flagged))}))
    return 0


def _cmd_montecarlo(args) -> int:
    rc = load_config(args.config)
    tmax = rc.theta_max if args.theta_max is None else args.theta_max
    spec = rc.domain(tmax)
    try:
        x0 = tuple(float(v) for v in args.x0.split(","))
    except ValueError:
        raise SystemExit("--x0 must be x1,x2")
    if len(x0) != 2:
        raise SystemExit("--x0 must be x1,x2")
    cfg = WalkerConfig(dt=args.dt, n=args.n, seed=args.seed, theta_max=tmax)
    est = estimate(rc.field, spec, rc.boundary(), x0, cfg)
    header = ("x1", "x2", "mean", "stderr", "n_exit_gamma", "n_exit_inner", "n_exit_far",
              "n_capped")
    row = (x0[0], x0[1], est.mean, est.stderr, est.n_exit_gamma, est.n_exit_inner,
           est.n_exit_far, est.n_capped)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    finally:
        if args.out:
            fh.close()
    return 0


def _experiment_config(args, unbounded=False) -> H.ExperimentConfig:
    kw = dict(n_lambda=args.nlambda, n_theta=args.ntheta, scheme=args.scheme,
              theta_star=args.theta_star, out_dir=args.out_dir)
    if args.config is None:
        if unbounded:
            return H.unbounded_config(theta_max=args.theta_max, **kw)
        return H.ExperimentConfig(theta_max=args.theta_max, **kw)
    rc = load_config(args.config)
    tmax = rc.theta_max if args.theta_max is None else args.theta_max
    return H.ExperimentConfig(curves=rc.curves, field=rc.field, kappa=rc.kappa, theta_max=tmax,
                              **kw)


def _report(rep, name, out_dir) -> int:
    summ = rep.summary()
    print(_dump(summ))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        rep.write_csv(os.path.join(out_dir, f"{name}.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump([summ], fh, indent=2, default=H._json_default)
    return 0 if rep.passed else 1


def _cmd_experiment(args) -> int:
    name = args.command
    cfg = _experiment_config(args, unbounded=name == "unbounded")
    if name == "dichotomy":
        rep = H.run_dichotomy(cfg, scenario=args.scenario)
    elif name == "arc-dichotomy":
        rep = H.run_arc_dichotomy(cfg)
    elif name == "unbounded":
        rep = H.run_unbounded(cfg)
    elif name == "inhomogeneous":
        rep = H.run_inhomogeneous(cfg)
    else:
        rep = H.run_dependence(cfg)
    return _report(rep, name, args.out_dir)


def _cmd_suite(args) -> int:
    results = H.suite(args.out_dir, quick=args.quick)
    for r in results:
        print(f"{r['experiment']}: {r['status']} ({r['seconds']} s)")
    if args.out_dir:
        print(f"summary written to {os.path.join(args.out_dir, 'summary.json')}")
    return 0 if all(r["status"] == "PASS" for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="winding", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="validate a domain and print its constants")
    g.add_argument("--config")
    g.set_defaults(func=_cmd_geometry)

    c = sub.add_parser("constants", help="print every constant bundle")
    c.add_argument("--config")
    c.add_argument("--theta-star", type=float)
    c.add_argument("--optimize-d-star", action="store_true",
                   help="maximize nu over d* instead of keeping the lower bound")
    c.set_defaults(func=_cmd_constants)

    s = sub.add_parser("solve", help="finite-difference solve on the strip")
    s.add_argument("--config")
    s.add_argument("--nlambda", type=int, default=21)
    s.add_argument("--ntheta", type=int)
    s.add_argument("--theta-max", type=float)
    s.add_argument("--far-data", type=float)
    s.add_argument("--scheme", default="hybrid", choices=("hybrid", "upwind", "central"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    m = sub.add_parser("montecarlo", help="walker estimate of u at one point")
    m.add_argument("--config")
    m.add_argument("--x0", required=True, help="x1,x2")
    m.add_argument("--n", type=int, default=10_000)
    m.add_argument("--dt", type=float)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--theta-max", type=float)
    m.add_argument("--out")
    m.set_defaults(func=_cmd_montecarlo)

    for name in ("dichotomy", "arc-dichotomy", "unbounded", "inhomogeneous", "dependence"):
        e = sub.add_parser(name, help=f"run the {name} check")
        e.add_argument("--config")
        e.add_argument("--theta-max", type=float)
        e.add_argument("--nlambda", type=int, default=21)
        e.add_argument("--ntheta", type=int)
        e.add_argument("--theta-star", type=float)
        e.add_argument("--scheme", default="hybrid", choices=("hybrid", "upwind", "central"))
        e.add_argument("--out-dir")
        if name == "dichotomy":
            e.add_argument("--scenario", default="decay", choices=("decay", "zero", "growth"))
        e.set_defaults(func=_cmd_experiment)

    su = sub.add_parser("suite", help="run every experiment")
    su.add_argument("--out-dir")
    su.add_argument("--quick", action="store_true", help="fewer walkers in the cross-check")
    su.set_defaults(func=_cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WindingError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
