"""Feynman-Kac walkers for L u = 0 with Dirichlet data.

With L u = -a_ij D_ij u + b . grad u the generator of the diffusion is
a_ij D_ij - b . grad, so a walker moves with drift -b and covariance 2A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import StepTooLarge
from .geometry import DomainSpec, cartesian_to_strip, strip_to_cartesian
from .operator import CoefficientField
from .solver import BoundaryData

DRIFT_SIGN = -1.0  # walker drift = DRIFT_SIGN * b
BLOCK = 8192

EXIT_GAMMA1, EXIT_GAMMA2, EXIT_INNER, EXIT_FAR = 1, 2, 3, 4


@dataclass(frozen=True)
class WalkerConfig:
    dt: Optional[float] = None
    n: int = 10_000
    seed: int = 0
    max_steps: int = 200_000
    snap_tol: float = 1e-10
    theta_max: Optional[float] = None

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n < 1000:
            raise ValueError("at least 1000 walkers")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_exit_gamma: int
    n_exit_inner: int
    n_exit_far: int
    n_capped: int
    dt: float

    def __iter__(self):
        yield self.mean
        yield self.stderr


def _sqrt_2x2(a11, a12, a22):
    """Principal square root of symmetric positive definite 2x2 matrices."""
    s = np.sqrt(a11 * a22 - a12 * a12)
    t = np.sqrt(a11 + a22 + 2 * s)
    return (a11 + s) / t, a12 / t, (a22 + s) / t


def _drift_bound(fld: CoefficientField, spec: DomainSpec, theta_max: float) -> float:
    if fld.M2 is not None:
        return fld.M2
    th = np.linspace(spec.theta0, theta_max, 2001)
    out = 0.0
    for lam in (0.0, 0.5, 1.0):
        x1, x2 = strip_to_cartesian(spec, lam, th)
        _, _, _, b1, b2 = fld.eval(x1, x2, th)
        out = max(out, float(np.hypot(b1, b2).max()))
    return out


def default_dt(fld: CoefficientField, spec: DomainSpec, theta_max: float) -> float:
    """(min gap)^2 / (8 M1) over the truncated domain."""
    th = np.linspace(spec.theta0, theta_max, 4001)
    gap = float(spec.gap(th).min())
    M1 = fld.M1
    if M1 is None:
        x1, x2 = strip_to_cartesian(spec, 0.5, th)
        a11, _, a22, _, _ = fld.eval(x1, x2, th)
        M1 = float((a11 + a22).max())
    return gap * gap / (8 * M1)


def _run_block(fld, spec, g: BoundaryData, lam0, th0, dt, n, rng, max_steps, theta_max):
    x1, x2 = strip_to_cartesian(spec, np.full(n, lam0), np.full(n, th0))
    theta = np.full(n, float(th0))
    idx = np.arange(n)
    values = np.full(n, np.nan)
    side = np.zeros(n, dtype=np.int8)
    sdt = math.sqrt(2 * dt)
    for _ in range(max_steps):
        if idx.size == 0:
            break
        a11, a12, a22, b1, b2 = fld.eval(x1, x2, theta)
        q11, q12, q22 = _sqrt_2x2(a11, a12, a22)
        xi = rng.standard_normal((2, idx.size))
        phi_old = np.arctan2(x2, x1)
        x1 = x1 + DRIFT_SIGN * b1 * dt + sdt * (q11 * xi[0] + q12 * xi[1])
        x2 = x2 + DRIFT_SIGN * b2 * dt + sdt * (q12 * xi[0] + q22 * xi[1])
        dphi = np.arctan2(x2, x1) - phi_old
        theta = theta + (dphi + np.pi) % (2 * np.pi) - np.pi
        r1, r2 = spec.radii(theta)
        lam = (np.hypot(x1, x2) - r1) / (r2 - r1)
        out_inner = theta <= spec.theta0
        out_far = theta >= theta_max
        out_g1 = lam <= 0
        out_g2 = lam >= 1
        done = out_inner | out_far | out_g1 | out_g2
        if done.any():
            lc = np.clip(lam[done], 0.0, 1.0)
            tc = np.clip(theta[done], spec.theta0, theta_max)
            sx1, sx2 = strip_to_cartesian(spec, lc, tc)
            code = np.where(out_inner[done], EXIT_INNER,
                            np.where(out_far[done], EXIT_FAR,
                                     np.where(out_g1[done], EXIT_GAMMA1, EXIT_GAMMA2)))
            vals = np.empty(lc.size)
            for c, name in ((EXIT_INNER, "inner"), (EXIT_FAR, "far"),
                            (EXIT_GAMMA1, "gamma1"), (EXIT_GAMMA2, "gamma2")):
                sel = code == c
                if sel.any():
                    gv = getattr(g, name)
                    vals[sel] = (gv(lc[sel], tc[sel], sx1[sel], sx2[sel]) if callable(gv)
                                 else float(gv))
            values[idx[done]] = vals
            side[idx[done]] = code
            keep = ~done
            idx, x1, x2, theta = idx[keep], x1[keep], x2[keep], theta[keep]
    return values, side


def estimate(fld: CoefficientField, spec: DomainSpec, g: BoundaryData, x0,
             cfg: WalkerConfig = WalkerConfig()) -> Estimate:
    """Monte Carlo estimate of u(x0); walkers run in blocks with substreams (seed, block)."""
    theta_max = spec.theta_max if cfg.theta_max is None else cfg.theta_max
    lam0, th0 = cartesian_to_strip(spec, np.atleast_1d(float(x0[0])), np.atleast_1d(float(x0[1])),
                                   theta_cap=theta_max)
    lam0, th0 = float(lam0[0]), float(th0[0])
    if not (0 < lam0 < 1 and spec.theta0 < th0 < theta_max):
        raise ValueError(f"x0={tuple(x0)} is not strictly inside the truncated domain")
    dt = default_dt(fld, spec, theta_max) if cfg.dt is None else cfg.dt
    thickness = float(spec.gap(np.linspace(spec.theta0, theta_max, 4001)).min())
    if dt * _drift_bound(fld, spec, theta_max) > thickness / 4:
        raise StepTooLarge(f"dt*M2 exceeds a quarter of the minimal gap {thickness:.3g}")
    vals, sides = [], []
    for blk, start in enumerate(range(0, cfg.n, BLOCK)):
        m = min(BLOCK, cfg.n - start)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, blk]))
        v, s = _run_block(fld, spec, g, lam0, th0, dt, m, rng, cfg.max_steps, theta_max)
        vals.append(v)
        sides.append(s)
    v = np.concatenate(vals)
    s = np.concatenate(sides)
    ok = s > 0
    n_ok = int(ok.sum())
    if n_ok == 0:
        mean, err = float("nan"), float("nan")
    else:
        vv = v[ok]
        if np.all(vv == vv[0]):
            mean, err = float(vv[0]), 0.0
        else:
            mean = float(vv.mean())
            err = float(vv.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else float("nan")
    return Estimate(mean, err, int(np.isin(s, (EXIT_GAMMA1, EXIT_GAMMA2)).sum()),
                    int((s == EXIT_INNER).sum()), int((s == EXIT_FAR).sum()),
                    int((~ok).sum()), dt)


def batch_estimate(fld, spec, g, points: Sequence, cfg: WalkerConfig = WalkerConfig()) -> list:
    return [estimate(fld, spec, g, p, cfg) for p in points]
