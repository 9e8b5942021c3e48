"""Numerical experiments that check the decay, growth and dependence estimates.

Each ``run_*`` function solves one or more problems on the truncated domain,
evaluates the matching envelope and records every point where the discrete
profile exceeds it by more than the tolerance

    1e-9 + 10 * solver residual + C * h * (data scale),

where C is calibrated on a manufactured solution on the same grid.
Reports say "consistent with" a branch: a finite window cannot prove one.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import constants as C
from .errors import WindingError
from .geometry import (CurvePair, DomainSpec, arc_length_table, example_a, strip_to_cartesian,
                       validate_domain)
from .montecarlo import WalkerConfig, estimate
from .operator import CoefficientField, laplacian, validate_ellipticity
from .solver import (BoundaryData, GridSolution, StripGrid, cross_profiles, manufactured_error,
                     solve_problem)

RATE_FLOOR = 1e-13
SEQ_FLOOR = 1e-12
ENVELOPES = ("thm1", "cor1", "thm3", "thmih1", "corih1", "thmih3", "dep1", "dep2")


@dataclass
class ExperimentConfig:
    curves: CurvePair = field(default_factory=example_a)
    field: CoefficientField = field(default_factory=laplacian)
    theta_max: Optional[float] = None  # truncation; default theta0 + 16 pi
    n_lambda: int = 21
    n_theta: Optional[int] = None  # default keeps h_theta <= h_lambda / 2.5
    theta_star: Optional[float] = None
    fit_window: Optional[tuple] = None
    kappa: Optional[float] = None
    scheme: str = "hybrid"
    envelope: str = "thm1"
    out_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.envelope not in ENVELOPES:
            raise ValueError(f"envelope must be one of {ENVELOPES}")

    @property
    def theta0(self) -> float:
        return self.curves.theta0

    @property
    def truncation(self) -> float:
        return self.theta0 + 16 * math.pi if self.theta_max is None else self.theta_max

    def grid(self) -> StripGrid:
        nt = self.n_theta
        if nt is None:
            h = (1.0 / (self.n_lambda - 1)) / 2.5
            nt = int(math.ceil((self.truncation - self.theta0) / h)) + 1
        return StripGrid(self.n_lambda, nt, self.theta0, self.truncation)

    def domain(self) -> DomainSpec:
        return validate_domain(self.curves, max(self.truncation, self.theta0 + 4 * math.pi + 1.0))


@dataclass(frozen=True)
class Violation:
    check: str
    theta: float
    value: float
    bound: float


@dataclass
class DichotomyReport:
    experiment: str
    branch: str
    nu_emp: float
    theta: np.ndarray
    profile: np.ndarray
    envelope: np.ndarray
    tolerance: float
    violations: List[Violation]
    below_exponential: str = "PASS"
    allowance_C: float = 0.0
    numbers: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "PASS" if not self.violations else "FAIL"

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> dict:
        out = {"experiment": self.experiment, "status": self.status,
               "branch": f"consistent with {self.branch}" if self.branch else "",
               "nu_emp": self.nu_emp, "tolerance": self.tolerance,
               "allowance_C": self.allowance_C, "n_violations": len(self.violations),
               "below_exponential": self.below_exponential}
        out.update(self.numbers)
        if self.violations:
            v = self.violations[0]
            out["first_violation"] = f"{v.check} at theta={v.theta:.6g}: {v.value:.6g} > {v.bound:.6g}"
        return out

    def write_csv(self, path: str):
        cols = {"theta": self.theta, "profile": self.profile, "envelope": self.envelope}
        cols.update(self.columns)
        keys = list(cols)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for row in zip(*(np.asarray(cols[k]) for k in keys)):
                w.writerow([f"{v:.17g}" for v in row])


# ---------------------------------------------------------------------------
# shared pieces

def _check(violations, name, theta, values, bound, tol):
    values = np.asarray(values, float)
    bound = np.broadcast_to(np.asarray(bound, float), values.shape)
    theta = np.broadcast_to(np.asarray(theta, float), values.shape)
    bad = values > bound + tol
    for k in np.nonzero(bad.ravel())[0]:
        violations.append(Violation(name, float(theta.ravel()[k]), float(values.ravel()[k]),
                                    float(bound.ravel()[k] + tol)))


def calibrate_allowance(fld: CoefficientField, spec: DomainSpec, grid: StripGrid,
                        scheme: str = "hybrid") -> float:
    """C such that C * h bounds the nodal error of a unit-size manufactured solution."""
    h = max(grid.h_lambda, grid.h_theta)
    return manufactured_error(fld, spec, grid, scheme=scheme) / h


def tolerance(sol: GridSolution, C_allow: float, scale: float) -> float:
    h = max(sol.grid.h_lambda, sol.grid.h_theta)
    return 1e-9 + 10 * sol.residual + C_allow * h * scale


def fit_rate(theta, values, window=None) -> float:
    """Least-squares slope of ln(values) against theta (values > 1e-13 only)."""
    theta = np.asarray(theta, float)
    values = np.asarray(values, float)
    sel = values > RATE_FLOOR
    if window is not None:
        sel &= (theta >= window[0]) & (theta <= window[1])
    if sel.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(theta[sel], np.log(values[sel]), 1)
    return float(slope)


def check_below_exponential(theta, profile, eps_list=(0.05, 0.1, 0.5)):
    """Definition check on a finite window: for each eps the fitted slope of
    ln(profile) - eps theta over the tail half must be negative.

    Returns (verdict, witness eps or None).
    """
    theta = np.asarray(theta, float)
    profile = np.asarray(profile, float)
    tail = theta >= theta[0] + 0.5 * (theta[-1] - theta[0])
    pos = tail & (profile > 0)
    for eps in eps_list:
        if pos.sum() < 2:
            continue
        slope, _ = np.polyfit(theta[pos], np.log(profile[pos]) - eps * theta[pos], 1)
        if not slope < 0:
            return "FAIL", eps
    return "PASS", None


def cross_section_values(sol: GridSolution, thetas) -> np.ndarray:
    """Max of u over S_theta at arbitrary theta, linear in theta between columns."""
    g = sol.grid
    f = np.clip((np.asarray(thetas, float) - g.theta0) / g.h_theta, 0, g.n_theta - 1)
    j = np.minimum(np.floor(f).astype(int), g.n_theta - 2)
    t = (f - j)[:, None]
    cols = (1 - t) * sol.values[j] + t * sol.values[j + 1]
    return cols.max(axis=1)


def sequence_branch(sol: GridSolution, gc: C.GrowthConstants):
    """Feed max u+ at theta0 + i theta* to the sequence classifier."""
    g = sol.grid
    n = int(math.floor((g.theta_max - g.theta0) / gc.theta_star + 1e-12))
    if n < 2:
        return None, []
    th = g.theta0 + gc.theta_star * np.arange(n + 1)
    a = np.maximum(cross_section_values(sol, th), 0.0)
    top = a.max()
    a = np.where(a < SEQ_FLOOR * top, 0.0, a) if top > 0 else a
    lam = [gc.eta_star] * n  # one factor per index, the last one included
    if not gc.eta_star < 1:
        return None, list(a)
    return C.classify_sequence(a, lam), list(a)


def _profile_bounds(sol):
    """Maxima of u and of |u| on the gamma-like boundary (gamma and the far side)."""
    V = sol.values
    gam = np.concatenate((V[:, 0], V[:, -1], V[-1, :]))
    s0 = V[0, :]
    return gam, s0


def _setup(cfg: ExperimentConfig, bounded=True):
    spec = cfg.domain()
    ell = validate_ellipticity(cfg.field, spec, kappa=cfg.kappa)
    gc = C.annulus_constants(spec, ell, theta_star=cfg.theta_star) if bounded else None
    return spec, ell, gc, cfg.grid()


def _window(cfg, gc_theta_star, grid):
    if cfg.fit_window is not None:
        return cfg.fit_window
    return (grid.theta0, grid.theta_max - 4 * gc_theta_star)


# ---------------------------------------------------------------------------
# homogeneous problems

def run_dichotomy(cfg: ExperimentConfig, scenario: str = "decay") -> DichotomyReport:
    """Dichotomy check for L u = 0 with zero data on gamma.

    ``scenario``: ``decay`` (unit data on the first cross-section, zero far data),
    ``zero`` (all data zero) or ``growth`` (zero inner data, far data
    exp(nu (theta_max - theta0))).
    """
    spec, ell, gc, grid = _setup(cfg)
    if scenario == "growth":
        # end the window on a sampling angle so the far data enters the sequence
        n = int(math.floor((grid.theta_max - grid.theta0) / gc.theta_star))
        tmax = grid.theta0 + n * gc.theta_star
        h = grid.h_theta
        grid = StripGrid(grid.n_lambda, int(math.ceil((tmax - grid.theta0) / h)) + 1,
                         grid.theta0, tmax)
    if scenario == "decay":
        bc = BoundaryData(inner=1.0)
    elif scenario == "zero":
        bc = BoundaryData()
    elif scenario == "growth":
        bc = BoundaryData(far=math.exp(gc.nu * (grid.theta_max - grid.theta0)))
    else:
        raise ValueError("scenario must be decay, zero or growth")
    sol = solve_problem(cfg.field, spec, grid, bc, scheme=cfg.scheme)
    prof = cross_profiles(sol)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    M0 = float(prof.maxabs[0])
    tol = tolerance(sol, C_allow, max(M0, float(np.abs(sol.values).max())))
    branch, seq = sequence_branch(sol, gc)
    tag = branch.tag if branch is not None else "Undetermined"
    violations: List[Violation] = []
    theta = prof.theta
    env = C.decay_envelope(gc, M0, grid.theta0)(theta)
    window = _window(cfg, gc.theta_star, grid)
    if scenario == "growth":
        slope = fit_rate(theta, prof.maxabs)
        if tag != "Growth":
            violations.append(Violation("branch", float("nan"), 0.0, 0.0))
        if not slope > 0:
            violations.append(Violation("growth_rate", float("nan"), slope, 0.0))
        nu_emp = slope
        verdict = check_below_exponential(theta, prof.maxabs)[0]
    else:
        # interior of the closed region, the far cross-section included
        _check(violations, "envelope", theta, prof.maxabs, env, tol)
        _check(violations, "max_principle", theta, prof.maxabs, M0, tol)
        slope = fit_rate(theta, prof.maxabs, window)
        nu_emp = -slope if math.isfinite(slope) else (math.inf if M0 > 0 else float("nan"))
        if M0 > 0:
            if tag != "Decay":
                violations.append(Violation("branch", float("nan"), 0.0, 0.0))
            if not nu_emp >= gc.nu:
                violations.append(Violation("rate", float("nan"), nu_emp, gc.nu))
        verdict = check_below_exponential(theta, prof.maxabs)[0]
    return DichotomyReport(
        f"dichotomy-{scenario}", tag, nu_emp, theta, prof.maxabs, env, tol, violations, verdict,
        C_allow,
        numbers={"nu": gc.nu, "C_star": gc.C_star, "eta_star": gc.eta_star,
                 "theta_star": gc.theta_star, "M0": M0, "residual": sol.residual,
                 "sequence": [float(v) for v in seq]},
        columns={"maxpos": prof.maxpos, "maxneg": prof.maxneg, "osc": prof.osc})


def run_arc_dichotomy(cfg: ExperimentConfig, tighten: float = 0.1) -> DichotomyReport:
    """Same problem as the decay dichotomy, checked node by node against the
    arc-distance envelope C*' M0 exp(-nu' l), plus the tightened variant."""
    spec, ell, gc, grid = _setup(cfg)
    sol = solve_problem(cfg.field, spec, grid, BoundaryData(inner=1.0), scheme=cfg.scheme)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    M0 = float(np.abs(sol.values[0]).max())
    tol = tolerance(sol, C_allow, M0)
    ell_tab = arc_length_table(spec, grid.lam, grid.theta).T  # (n_theta, n_lambda)
    env = C.arc_envelope(spec, gc, M0)
    violations: List[Violation] = []
    absu = np.abs(sol.values)
    _check(violations, "arc_envelope", ell_tab, absu, env(ell_tab), tol)
    numbers = {"nu_prime": env.nu_prime, "C_star_prime": env.C_star_prime, "k_star": env.k_star,
               "nu": gc.nu, "C_star": gc.C_star, "M0": M0}
    if tighten is not None and spec.mu_star == 0:
        tight = C.arc_envelope(spec, gc, M0, tighten=tighten)
        _check(violations, "arc_envelope_tight", ell_tab, absu, tight(ell_tab), tol)
        numbers.update({"k_eps": tight.k_eps, "eps": tight.eps, "nu_prime_eps": tight.nu_prime,
                        "C_star_prime_eps": tight.C_star_prime, "Theta_eps": tight.Theta_eps,
                        "L_eps": tight.L_eps})
        if not tight.k_eps < env.k_star:
            violations.append(Violation("k_eps", float("nan"), tight.k_eps, env.k_star))
    # bins of one theta-step in l for the reported profile
    width = grid.h_theta * spec.r_star
    edges = np.arange(0.0, ell_tab.max() + width, width)
    which = np.digitize(ell_tab.ravel(), edges) - 1
    prof = np.zeros(edges.size)
    np.maximum.at(prof, which, absu.ravel())
    slope = fit_rate(edges, prof)
    return DichotomyReport("arc-dichotomy", "Decay" if not violations else "",
                           -slope if math.isfinite(slope) else math.inf, edges, prof, env(edges),
                           tol, violations, check_below_exponential(edges, prof)[0], C_allow,
                           numbers=numbers)


def choose_unbounded_theta_star(spec: DomainSpec, ell: C.EllipticityData, n: int = 25) -> float:
    lo, hi = C.admissible_theta_interval(spec.r_star, spec.d0)
    best, arg = -1.0, None
    for t in lo + (hi - lo) * np.linspace(0.04, 0.96, n):
        try:
            uc = C.unbounded_constants(spec, ell, float(t))
        except WindingError:
            continue
        if uc.nu_bar > best:
            best, arg = uc.nu_bar, float(t)
    if arg is None:
        raise C.NoAdmissibleEpsilon("no admissible theta* for the unbounded construction")
    return arg


def run_unbounded(cfg: ExperimentConfig, scenario: str = "decay") -> DichotomyReport:
    """Unbounded-drift estimate M0 min(1, exp(-nu_bar int kappa^m))."""
    spec, ell, _, grid = _setup(cfg, bounded=False)
    if ell.bounded:
        raise ValueError("run_unbounded needs an unbounded drift preset")
    ts = cfg.theta_star if cfg.theta_star is not None else choose_unbounded_theta_star(spec, ell)
    uc = C.unbounded_constants(spec, ell, ts)
    bc = BoundaryData(inner=1.0) if scenario == "decay" else BoundaryData()
    sol = solve_problem(cfg.field, spec, grid, bc, scheme=cfg.scheme)
    prof = cross_profiles(sol)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    M0 = float(prof.maxabs[0])
    tol = tolerance(sol, C_allow, M0)
    env = C.unbounded_envelope(uc, M0)(prof.theta)
    violations: List[Violation] = []
    _check(violations, "unbounded_envelope", prof.theta, prof.maxabs, env, tol)
    slope = fit_rate(prof.theta, prof.maxabs, _window(cfg, ts, grid))
    return DichotomyReport(
        f"unbounded-{scenario}", "Decay" if M0 > 0 else "", -slope if math.isfinite(slope) else math.inf,
        prof.theta, prof.maxabs, env, tol, violations,
        check_below_exponential(prof.theta, prof.maxabs)[0], C_allow,
        numbers={"nu_bar": uc.nu_bar, "Theta0": uc.Theta0, "kappa": uc.kappa,
                 "kappa_bar": uc.kappa_bar, "theta_star": ts, "N": uc.N, "mt1": uc.mt1,
                 "lambda0": uc.lambda0, "M0": M0})


# ---------------------------------------------------------------------------
# inhomogeneous problems and dependence

def _inhomogeneous_checks(name, sol, gc, kc, M_f, C_allow, violations):
    """Maximum principle, oscillation envelope and the forcing bound for one solution."""
    V = sol.values
    g = sol.grid
    gam, s0 = _profile_bounds(sol)
    prof = cross_profiles(sol)
    scale = max(float(np.abs(V).max()), 1.0)
    tol = tolerance(sol, C_allow, scale)
    th = g.theta
    e = np.exp(-gc.nu * (th - g.theta0))
    if M_f == 0:
        sup0 = max(s0.max(), gam.max())
        inf0 = min(s0.min(), gam.min())
        _check(violations, f"{name}:sup", th, V.max(axis=1), sup0, tol)
        _check(violations, f"{name}:inf", th, -V.min(axis=1), -inf0, tol)
        Mg, mg = gam.max(), gam.min()
        upper = Mg * (1 - gc.C_star * e) + gc.C_star * sup0 * e
        lower = mg * (1 - gc.C_star * e) + gc.C_star * inf0 * e
        _check(violations, f"{name}:upper", th, V.max(axis=1), upper, tol)
        _check(violations, f"{name}:lower", th, -V.min(axis=1), -lower, tol)
        osc_env = C.oscillation_envelope(gc, Mg - mg, sup0 - inf0, g.theta0)(th)
        _check(violations, f"{name}:osc", th, prof.osc, osc_env, tol)
    else:
        osc_env = np.full(th.shape, np.nan)
    M_B = float(np.abs(gam).max())
    bound = M_B + kc.K1 * M_f + gc.C_star * (float(np.abs(s0).max()) + M_B + kc.K1 * M_f) * e
    _check(violations, f"{name}:forcing", th, prof.maxabs, bound, tol)
    return prof, osc_env, bound, tol


def run_inhomogeneous(cfg: ExperimentConfig, scenarios=("constant", "sine", "forcing")) -> DichotomyReport:
    """(i) constant data; (ii) sin(theta) on gamma with constant data 2 on the
    first cross-section; (iii) zero data with unit forcing."""
    spec, ell, gc, grid = _setup(cfg)
    kc = C.inhomogeneous_constants(spec, ell, theta_max=grid.theta_max)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    violations: List[Violation] = []
    numbers = {"nu": gc.nu, "C_star": gc.C_star, "K0": kc.K0, "K1": kc.K1, "d1": kc.d1}
    cols = {}
    first = None
    for name in scenarios:
        fld = cfg.field
        M_f = 0.0
        if name == "constant":
            bc = BoundaryData.uniform(0.7)
        elif name == "sine":
            bc = BoundaryData.gamma(lambda l, t, x1, x2: np.sin(t), inner=2.0)
        elif name == "forcing":
            bc = BoundaryData()
            fld = fld.with_forcing(lambda x1, x2, theta=None: np.ones(np.shape(x1)))
            M_f = 1.0
        else:
            raise ValueError(f"unknown scenario {name}")
        sol = solve_problem(fld, spec, grid, bc, scheme=cfg.scheme)
        prof, osc_env, bound, tol = _inhomogeneous_checks(name, sol, gc, kc, M_f, C_allow,
                                                          violations)
        if name == "constant":
            numbers["constant_max_dev"] = float(np.abs(sol.values - 0.7).max())
        if name == "sine":
            tail = prof.theta > grid.theta_max - 4 * gc.theta_star
            numbers["sine_tail_osc"] = float(prof.osc[~tail][-1]) if (~tail).any() else float("nan")
            numbers["sine_gamma_osc"] = 2.0
        if name == "forcing":
            numbers["forcing_max"] = float(prof.maxabs.max())
            numbers["forcing_bound_min"] = float(bound.min())
        cols[f"{name}_osc"] = prof.osc
        cols[f"{name}_maxabs"] = prof.maxabs
        cols[f"{name}_osc_env"] = osc_env
        if first is None:
            first = (prof, bound, tol)
    prof, bound, tol = first
    return DichotomyReport("inhomogeneous", "", float("nan"), prof.theta, prof.maxabs, bound, tol,
                           violations, "PASS", C_allow, numbers=numbers, columns=cols)


def run_dependence(cfg: ExperimentConfig, delta: float = 0.1) -> DichotomyReport:
    """Continuous dependence: (i) identical inputs, (ii) perturbed first
    cross-section, (iii) perturbed forcing and gamma data."""
    spec, ell, gc, grid = _setup(cfg)
    kc = C.inhomogeneous_constants(spec, ell, theta_max=grid.theta_max)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    base_g = lambda l, t, x1, x2: np.sin(t) + 0.5 * x1
    base_f = lambda x1, x2, theta=None: np.cos(x2)
    fld0 = cfg.field.with_forcing(base_f)
    bc0 = BoundaryData.gamma(base_g, inner=lambda l, t, x1, x2: 1.0 + np.sin(np.pi * l))
    u0 = solve_problem(fld0, spec, grid, bc0, scheme=cfg.scheme)
    th = grid.theta
    e = np.exp(-gc.nu * (th - grid.theta0))
    violations: List[Violation] = []
    numbers = {"nu": gc.nu, "C_star": gc.C_star, "K1": kc.K1, "delta": delta}

    # (i) identical
    u1 = solve_problem(fld0, spec, grid, bc0, scheme=cfg.scheme)
    numbers["identical_max_diff"] = float(np.abs(u1.values - u0.values).max())
    if numbers["identical_max_diff"] != 0.0:
        violations.append(Violation("identical", float("nan"), numbers["identical_max_diff"], 0.0))

    # (ii) first cross-section perturbed by delta
    bc2 = BoundaryData.gamma(base_g, inner=lambda l, t, x1, x2: 1.0 + np.sin(np.pi * l)
                             + delta * np.sin(np.pi * l) ** 2)
    u2 = solve_problem(fld0, spec, grid, bc2, scheme=cfg.scheme)
    diff = np.abs(u2.values - u0.values)
    d_prof = diff.max(axis=1)
    D0 = float(d_prof[0])
    tol = tolerance(u2, C_allow, max(D0, 1.0)) + 10 * u0.residual
    _check(violations, "dep1:sup", th, d_prof, D0, tol)
    env1 = gc.C_star * D0 * e
    _check(violations, "dep1:decay", th, d_prof, env1, tol)
    numbers["dep1_D0"] = D0

    # (iii) forcing perturbed by delta, gamma data by delta / 2
    fld3 = cfg.field.with_forcing(lambda x1, x2, theta=None: np.cos(x2) + delta)
    bc3 = BoundaryData.gamma(lambda l, t, x1, x2: base_g(l, t, x1, x2) + 0.5 * delta,
                             inner=bc0.inner)
    u3 = solve_problem(fld3, spec, grid, bc3, scheme=cfg.scheme)
    diff3 = np.abs(u3.values - u0.values)
    d3 = diff3.max(axis=1)
    sup_gamma = float(np.concatenate((diff3[:, 0], diff3[:, -1], diff3[-1, :])).max())
    D0_3 = float(d3[0])
    env3 = ((1 + gc.C_star) * sup_gamma + kc.K1 * (1 + gc.C_star) * delta
            + gc.C_star * D0_3 * e)
    tol3 = tolerance(u3, C_allow, 1.0) + 10 * u0.residual
    _check(violations, "dep2", th, d3, env3, tol3)
    numbers.update({"dep2_sup_gamma": sup_gamma, "dep2_max_diff": float(d3.max()),
                    "dep2_bound_min": float(env3.min())})
    return DichotomyReport("dependence", "", float("nan"), th, d_prof, env1, tol, violations,
                           "PASS", C_allow, numbers=numbers,
                           columns={"dep2_diff": d3, "dep2_bound": env3})


def far_field_sensitivity(cfg: ExperimentConfig) -> DichotomyReport:
    """Effect of the artificial far boundary: far data 0 versus 1.

    The difference solves the homogeneous problem with data only on the far
    side, so read backwards from theta_max it obeys the decay envelope
    C* exp(-nu (theta_max - theta)).
    """
    spec, ell, gc, grid = _setup(cfg)
    u0 = solve_problem(cfg.field, spec, grid, BoundaryData(inner=1.0), scheme=cfg.scheme)
    u1 = solve_problem(cfg.field, spec, grid, BoundaryData(inner=1.0, far=1.0), scheme=cfg.scheme)
    C_allow = calibrate_allowance(cfg.field, spec, grid, cfg.scheme)
    d = np.abs(u1.values - u0.values).max(axis=1)
    th = grid.theta
    env = np.minimum(1.0, gc.C_star * np.exp(-gc.nu * (grid.theta_max - th)))
    tol = tolerance(u1, C_allow, 1.0) + 10 * u0.residual
    violations: List[Violation] = []
    _check(violations, "far_field", th, d, env, tol)
    lo, hi = _window(cfg, gc.theta_star, grid)
    in_win = (th >= lo) & (th <= hi)
    return DichotomyReport("far-field", "", float("nan"), th, d, env, tol, violations, "PASS",
                           C_allow, numbers={"max_diff_in_window": float(d[in_win].max()),
                                             "bound_in_window": float(env[in_win].max())})


# ---------------------------------------------------------------------------
# Monte Carlo cross-check

@dataclass
class CrossOracleReport:
    probes: list
    fd: np.ndarray
    mc: np.ndarray
    stderr: np.ndarray
    allowance: float
    exits: list

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.mc - self.fd) <= 3 * self.stderr + self.allowance))

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def summary(self) -> dict:
        return {"experiment": "cross-oracle", "status": self.status,
                "max_abs_diff": float(np.abs(self.mc - self.fd).max()),
                "max_stderr": float(self.stderr.max()), "allowance": self.allowance,
                "n_probes": len(self.probes)}


def cross_oracle_data(l, t, x1, x2):
    return x1 + 0.5 * x2 * x2


def run_cross_oracle(cfg: Optional[ExperimentConfig] = None, n: int = 100_000,
                     allowance: float = 2e-2, probes: Optional[Sequence] = None,
                     dt: Optional[float] = None) -> CrossOracleReport:
    """Finite differences against Feynman-Kac walkers at interior probes."""
    cfg = cfg or ExperimentConfig(theta_max=math.pi, n_lambda=81)
    spec = cfg.domain()
    grid = cfg.grid()
    bc = BoundaryData.uniform(cross_oracle_data)
    sol = solve_problem(cfg.field, spec, grid, bc, scheme=cfg.scheme)
    if probes is None:
        span = grid.theta_max - grid.theta0
        probes = [(lam, grid.theta0 + frac * span)
                  for frac in (0.15, 0.3, 0.45, 0.6, 0.75) for lam in (0.3, 0.7)]
    wc = WalkerConfig(dt=dt, n=n, seed=cfg.seed, theta_max=grid.theta_max)
    fd, mc, se, exits = [], [], [], []
    for lam, th in probes:
        x = strip_to_cartesian(spec, lam, th)
        est = estimate(cfg.field, spec, bc, (float(x[0]), float(x[1])), wc)
        fd.append(float(sol.interpolate(lam, th)))
        mc.append(est.mean)
        se.append(est.stderr)
        exits.append((est.n_exit_gamma, est.n_exit_inner, est.n_exit_far, est.n_capped))
    return CrossOracleReport(list(probes), np.array(fd), np.array(mc), np.array(se), allowance,
                             exits)


# ---------------------------------------------------------------------------
# suite

def suite(out_dir: Optional[str] = None, quick: bool = False) -> list:
    """All harness experiments; writes summary.json and per-experiment CSVs when asked."""
    base = ExperimentConfig()
    experiments = [
        ("dichotomy", lambda: run_dichotomy(base)),
        ("dichotomy-growth", lambda: run_dichotomy(ExperimentConfig(theta_max=base.theta0 + 4 * math.pi),
                                                   scenario="growth")),
        ("arc-dichotomy", lambda: run_arc_dichotomy(base)),
        ("unbounded", lambda: run_unbounded(unbounded_config())),
        ("inhomogeneous", lambda: run_inhomogeneous(ExperimentConfig(theta_max=base.theta0 + 8 * math.pi))),
        ("dependence", lambda: run_dependence(ExperimentConfig(theta_max=base.theta0 + 8 * math.pi))),
        ("far-field", lambda: far_field_sensitivity(ExperimentConfig(theta_max=base.theta0 + 4 * math.pi))),
        ("cross-oracle", lambda: run_cross_oracle(n=10_000 if quick else 100_000)),
    ]
    results = []
    for name, fn in experiments:
        t0 = time.perf_counter()
        try:
            rep = fn()
            summ = rep.summary()
        except WindingError as exc:
            rep, summ = None, {"experiment": name, "status": "FAIL", "error": str(exc)}
        summ["experiment"] = name
        summ["seconds"] = round(time.perf_counter() - t0, 3)
        results.append(summ)
        if out_dir and isinstance(rep, DichotomyReport):
            os.makedirs(out_dir, exist_ok=True)
            rep.write_csv(os.path.join(out_dir, f"{name}.csv"))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(results, fh, indent=2, default=_json_default)
    return results


def unbounded_config(alpha: float = 0.5, kappa: float = 0.2, **kw) -> ExperimentConfig:
    from .operator import logangular_drift
    return ExperimentConfig(field=laplacian().with_drift(logangular_drift(alpha)), kappa=kappa, **kw)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)
