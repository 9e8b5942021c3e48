"""Winding-domain geometry.

The domain is the region between two spiral curves r1(theta) < r < r2(theta)
that wind counter-clockwise around the limit circle |x| = r_star.  Angles are
*unwrapped*: a point is addressed by its winding angle theta >= theta0, never
by theta mod 2*pi.  The strip chart (lam, theta) in [0, 1] x [theta0, inf)
maps to the closed region through

    x = R_lam(theta) * (cos theta, sin theta),  R_lam = (1 - lam) r1 + lam r2.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousBranch, MissingArcData, NonNested, NonPositiveRadius
from .quadrature import adaptive_simpson

TWO_PI = 2.0 * math.pi
ON_GAMMA_TOL = 1e-10

FAMILIES = ("ExampleA", "ExampleB", "ExampleC", "Custom")


# ---------------------------------------------------------------------------
# curve families

def _phase(theta, z, eps, om, trig, power):
    """g, g', g'' for g(theta) = theta + z + eps * trig(om * theta**power)."""
    theta = np.asarray(theta, dtype=float)
    g = theta + z
    dg = np.ones_like(theta)
    d2g = np.zeros_like(theta)
    if eps == 0.0:
        return g, dg, d2g
    p = power
    arg = om * theta**p
    if trig == "cos":
        t0, t1 = np.cos(arg), -np.sin(arg)
        t2 = -np.cos(arg)
    else:
        t0, t1 = np.sin(arg), np.cos(arg)
        t2 = -np.sin(arg)
    darg = om * p * theta ** (p - 1) if p != 1 else om * np.ones_like(theta)
    d2arg = om * p * (p - 1) * theta ** (p - 2) if p != 1 else np.zeros_like(theta)
    g = g + eps * t0
    dg = dg + eps * t1 * darg
    d2g = d2g + eps * (t2 * darg**2 + t1 * d2arg)
    return g, dg, d2g


def _family_radius(r_star, s, z, eps, om, trig, power):
    def r(theta, order=0):
        g, dg, d2g = _phase(theta, z, eps, om, trig, power)
        with np.errstate(invalid="ignore", divide="ignore"):
            if order == 0:
                return r_star * (1.0 + g ** (-s))
            if order == 1:
                return -s * r_star * g ** (-s - 1) * dg
            return s * (s + 1) * r_star * g ** (-s - 2) * dg**2 - s * r_star * g ** (-s - 1) * d2g

    return r


@dataclass(frozen=True, eq=False)
class CurvePair:
    """The bounding curves gamma_1 (inner, r1) and gamma_2 (outer, r2).

    ``r1``/``r2`` are vectorised callables ``f(theta, order)`` returning the
    radius (order 0) or its first/second derivative.  Custom curves may pass
    plain ``f(theta)`` callables; derivatives then fall back to central
    differences.
    """

    theta0: float
    r1: Callable
    r2: Callable
    family: str = "Custom"
    params: dict = field(default_factory=dict)
    analytic: bool = False

    def radius(self, i, theta, order=0):
        f = self.r1 if i == 1 else self.r2
        theta = np.asarray(theta, dtype=float)
        if self.analytic:
            return f(theta, order)
        if order == 0:
            return np.asarray(f(theta), dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(theta))
        if order == 1:
            return (np.asarray(f(theta + h)) - np.asarray(f(theta - h))) / (2 * h)
        h = 1e-4 * np.maximum(1.0, np.abs(theta))
        return (np.asarray(f(theta + h)) - 2 * np.asarray(f(theta)) + np.asarray(f(theta - h))) / h**2

    def radii(self, theta, order=0):
        return self.radius(1, theta, order), self.radius(2, theta, order)


def example_a(r_star=1.0, s=1.0, z1=2.0, z2=1.0, theta0=0.0) -> CurvePair:
    """r_i = r_star (1 + (theta + z_i)^-s)."""
    return CurvePair(
        theta0=float(theta0),
        r1=_family_radius(r_star, s, z1, 0.0, 0.0, "cos", 1),
        r2=_family_radius(r_star, s, z2, 0.0, 0.0, "cos", 1),
        family="ExampleA",
        params=dict(r_star=r_star, s=s, z1=z1, z2=z2, eps1=0.0, eps2=0.0, om1=0.0, om2=0.0),
        analytic=True,
    )


def example_b(r_star=1.0, s=1.0, z1=3.0, z2=1.0, eps1=0.3, eps2=0.3, om1=1.0, om2=1.0,
              theta0=0.0, trig="cos") -> CurvePair:
    """r_i = r_star (1 + (theta + z_i + eps_i trig(om_i theta))^-s)."""
    return CurvePair(
        theta0=float(theta0),
        r1=_family_radius(r_star, s, z1, eps1, om1, trig, 1),
        r2=_family_radius(r_star, s, z2, eps2, om2, trig, 1),
        family="ExampleB",
        params=dict(r_star=r_star, s=s, z1=z1, z2=z2, eps1=eps1, eps2=eps2, om1=om1, om2=om2,
                    trig=trig),
        analytic=True,
    )


def example_c(r_star=1.0, s=1.0, z1=3.0, z2=1.0, eps1=0.3, eps2=0.3, om1=0.1, om2=0.1,
              theta0=0.0, trig="cos") -> CurvePair:
    """Like ExampleB with the oscillation phase om_i * theta^(s+2); theta0 >= 0."""
    return CurvePair(
        theta0=float(theta0),
        r1=_family_radius(r_star, s, z1, eps1, om1, trig, s + 2),
        r2=_family_radius(r_star, s, z2, eps2, om2, trig, s + 2),
        family="ExampleC",
        params=dict(r_star=r_star, s=s, z1=z1, z2=z2, eps1=eps1, eps2=eps2, om1=om1, om2=om2,
                    trig=trig),
        analytic=True,
    )


def custom_curves(r1, r2, theta0=0.0, analytic=False, **params) -> CurvePair:
    return CurvePair(theta0=float(theta0), r1=r1, r2=r2, family="Custom", params=params,
                     analytic=analytic)


def _check_family_parameters(curves: CurvePair):
    p = curves.params
    fam = curves.family
    if fam == "Custom":
        return
    th0 = curves.theta0
    if p["r_star"] <= 0 or p["s"] <= 0:
        raise NonPositiveRadius(f"{fam}: r_star and s must be positive")
    z1, z2 = p["z1"], p["z2"]
    e1, e2 = abs(p["eps1"]), abs(p["eps2"])
    if fam == "ExampleA":
        if not z2 > -th0:
            raise NonPositiveRadius(f"ExampleA needs z2 > -theta0 (z2={z2}, theta0={th0})")
        if not (0 <= z2 < z1 < z2 + TWO_PI):
            raise NonNested(f"ExampleA needs 0 <= z2 < z1 < z2 + 2pi (z1={z1}, z2={z2})", th0)
        return
    if fam == "ExampleC" and th0 < 0:
        raise NonPositiveRadius("ExampleC needs theta0 >= 0")
    if z1 < 0 or z2 < 0:
        raise NonNested(f"{fam} needs z1, z2 >= 0", th0)
    if not (th0 + z1 - e1 > 0 and th0 + z2 - e2 > 0):
        raise NonPositiveRadius(f"{fam} needs theta0 + z_i - |eps_i| > 0")
    if not (e1 + e2 < z1 - z2 < TWO_PI - (e1 + e2)):
        raise NonNested(
            f"{fam} needs |eps1|+|eps2| < z1-z2 < 2pi-(|eps1|+|eps2|) "
            f"(z1-z2={z1 - z2}, |eps1|+|eps2|={e1 + e2})", th0)


# ---------------------------------------------------------------------------
# validated domain

@dataclass(frozen=True, eq=False)
class DomainSpec:
    curves: CurvePair
    theta_max: float
    r_star: float
    r_bar: float
    mu0: float
    mu_star: float
    Theta: float
    L_star: float
    r_star_uncertainty: float = 0.0
    validated: bool = True

    @property
    def theta0(self) -> float:
        return self.curves.theta0

    @property
    def k_star(self) -> float:
        return (self.r_bar + self.mu0) / self.r_star

    @property
    def d0(self) -> float:
        return self.r_bar - self.r_star

    def radii(self, theta, order=0):
        return self.curves.radii(theta, order)

    def R(self, lam, theta, order=0):
        r1, r2 = self.curves.radii(theta, order)
        return (1.0 - np.asarray(lam)) * r1 + np.asarray(lam) * r2

    def gap(self, theta):
        r1, r2 = self.curves.radii(theta)
        return r2 - r1

    def point(self, lam, theta) -> "DomainPoint":
        return DomainPoint.from_strip(self, lam, theta)

    def summary(self) -> dict:
        return {
            "family": self.curves.family,
            "theta0": self.theta0,
            "theta_max": self.theta_max,
            "r_star": self.r_star,
            "r_star_uncertainty": self.r_star_uncertainty,
            "r_bar": self.r_bar,
            "mu0": self.mu0,
            "mu_star": self.mu_star,
            "Theta": self.Theta,
            "L_star": self.L_star,
            "k_star": self.k_star,
        }


def validate_domain(curves: CurvePair, theta_max: float, n_samples: int = 10_000,
                    Theta: Optional[float] = None, tol: float = 1e-10) -> DomainSpec:
    """Check the nesting condition on samples and derive the geometric constants.

    Raises NonNested (with the offending angle) or NonPositiveRadius.
    """
    th0 = curves.theta0
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if not theta_max > th0 + 2 * TWO_PI:
        raise ValueError("theta_max must exceed theta0 + 4 pi")
    _check_family_parameters(curves)

    theta = np.linspace(th0, theta_max, n_samples)
    r1, r2 = curves.radii(theta)
    r2_next = curves.radius(2, theta + TWO_PI)
    for arr in (r1, r2, r2_next):
        bad = ~(np.isfinite(arr) & (arr > 0))
        if bad.any():
            raise NonPositiveRadius(f"non-positive or undefined radius at theta={theta[bad][0]:.6g}")
    bad = ~((r2_next < r1) & (r1 < r2))
    if bad.any():
        t = float(theta[bad][0])
        raise NonNested(f"nesting r2(theta+2pi) < r1(theta) < r2(theta) fails at theta={t:.6g}", t)

    p = curves.params
    fam = curves.family
    dense = np.linspace(th0, theta_max, max(n_samples, 20_001))
    d1, d2 = curves.radii(dense, 1)
    if fam == "Custom":
        tail = theta >= theta_max - 2 * TWO_PI
        head = tail & (theta <= theta_max - TWO_PI)
        last = theta >= theta_max - TWO_PI
        r_min_tail = float(r1[tail].min())
        unc = max(0.0, float(r1[head].min() - r1[last].min()))
        r_star = max(r_min_tail - unc, 1e-300)
        r_bar = float(r2.max())
        tail_d = dense >= theta_max - 2 * TWO_PI
        mu_star = float(max(np.abs(d1[tail_d]).max(), np.abs(d2[tail_d]).max()))
        Theta = th0 if Theta is None else float(Theta)
    else:
        r_star = float(p["r_star"])
        unc = 0.0
        s = p["s"]
        # r2 is bounded by its value with the phase pushed as low as possible
        base = th0 + p["z2"] - abs(p["eps2"])
        r_bar = r_star * (1.0 + base ** (-s))
        if fam == "ExampleC":
            mu_star = max(s * r_star * abs(p["eps1"]) * p["om1"] * (s + 2),
                          s * r_star * abs(p["eps2"]) * p["om2"] * (s + 2))
        else:
            mu_star = 0.0
        Theta = th0 if Theta is None else float(Theta)

    sel = dense >= Theta
    mu0 = float(max(np.abs(d1[sel]).max(), np.abs(d2[sel]).max(), mu_star))
    L_star = 0.0
    if Theta > th0:
        L_star = _abs_derivative_integral(curves, th0, Theta)

    return DomainSpec(curves=curves, theta_max=float(theta_max), r_star=r_star, r_bar=r_bar,
                      mu0=mu0, mu_star=mu_star, Theta=Theta, L_star=L_star,
                      r_star_uncertainty=unc)


def unchecked_domain(curves: CurvePair, theta_max: float, r_star: float, r_bar: float,
                     mu0: float = 0.0, mu_star: float = 0.0) -> DomainSpec:
    """Build a DomainSpec without the nesting check (test geometries such as a
    plain annulus, which does not wind)."""
    return DomainSpec(curves=curves, theta_max=float(theta_max), r_star=r_star, r_bar=r_bar,
                      mu0=mu0, mu_star=mu_star, Theta=curves.theta0, L_star=0.0,
                      validated=False)


def _abs_derivative_integral(curves: CurvePair, a: float, b: float, tol=1e-10) -> float:
    """max_i int_a^b |r_i'|."""
    vals = adaptive_simpson(
        lambda t, owner: np.where(owner == 0, np.abs(curves.radius(1, t, 1)),
                                  np.abs(curves.radius(2, t, 1))),
        np.array([a, a]), np.array([b, b]), tol=tol)
    return float(vals.max())


# ---------------------------------------------------------------------------
# points and charts

@dataclass(frozen=True)
class DomainPoint:
    lam: float
    theta: float
    r: float
    x1: float
    x2: float

    @classmethod
    def from_strip(cls, spec: DomainSpec, lam, theta) -> "DomainPoint":
        r = float(spec.R(lam, theta))
        return cls(float(lam), float(theta), r, r * math.cos(theta), r * math.sin(theta))

    @property
    def cartesian(self):
        return (self.x1, self.x2)

    @property
    def polar(self):
        return (self.r, self.theta)

    @property
    def strip(self):
        return (self.lam, self.theta)


def strip_to_cartesian(spec: DomainSpec, lam, theta):
    R = spec.R(lam, theta)
    theta = np.asarray(theta, dtype=float)
    return R * np.cos(theta), R * np.sin(theta)


def cartesian_to_strip(spec: DomainSpec, x1, x2, theta_cap=None):
    """Vectorised inverse chart.  Points outside the closed region get NaN."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    phi = np.arctan2(x2, x1)
    theta, lam, _ = _resolve_branch(spec, r, phi, ON_GAMMA_TOL, theta_cap)
    return lam, theta


def _resolve_branch(spec: DomainSpec, r, phi, tol, theta_cap=None):
    """Unwrapped angle, lam and winding index k of each point (NaN / -1 if outside)."""
    th0 = spec.theta0
    shape = np.shape(r)
    r = np.ravel(r)
    base = th0 + np.mod(np.ravel(phi) - th0, TWO_PI)
    theta = np.full(r.shape, np.nan)
    lam = np.full(r.shape, np.nan)
    k_found = np.full(r.shape, -1, dtype=np.int64)
    active = r > spec.r_star
    k = 0
    while active.any():
        idx = np.nonzero(active)[0]
        th = base[idx] + TWO_PI * k
        r1, r2 = spec.radii(th)
        rr = r[idx]
        inside = (rr >= r1 - tol) & (rr <= r2 + tol)
        hit = idx[inside]
        theta[hit] = th[inside]
        lam[hit] = (rr[inside] - r1[inside]) / (r2 - r1)[inside]
        k_found[hit] = k
        # radii decrease with k, so once |x| is above r2 no later winding can contain it
        done = inside | (rr > r2 + tol)
        if theta_cap is not None:
            done |= th > theta_cap + TWO_PI
        active[idx[done]] = False
        k += 1
    return theta.reshape(shape), lam.reshape(shape), k_found.reshape(shape)


class Location(Enum):
    INSIDE = "Inside"
    ON_GAMMA = "OnGamma"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class Membership:
    status: Location
    theta: Optional[float] = None
    lam: Optional[float] = None
    winding: Optional[int] = None


def membership(spec: DomainSpec, x, tol: float = ON_GAMMA_TOL) -> Membership:
    """Classify a cartesian point and resolve its unwrapped angle.

    The inner boundary S_theta0 is not part of gamma; points on it are Inside
    when 0 < lam < 1.
    """
    x1, x2 = float(x[0]), float(x[1])
    r = math.hypot(x1, x2)
    if r <= spec.r_star:
        return Membership(Location.OUTSIDE)
    phi = math.atan2(x2, x1)
    base = spec.theta0 + (phi - spec.theta0) % TWO_PI
    found = None
    k = 0
    while True:
        th = base + TWO_PI * k
        r1, r2 = (float(v) for v in spec.radii(th))
        if r > r2 + tol:
            break
        if r >= r1 - tol:
            if found is not None:
                raise AmbiguousBranch(
                    f"x={x} lies on windings {found[2]} and {k}; nesting is broken")
            found = (th, (r - r1) / (r2 - r1), k)
        elif found is not None:
            break
        k += 1
    if found is None:
        return Membership(Location.OUTSIDE)
    th, lam, k = found
    r1, r2 = (float(v) for v in spec.radii(th))
    on = abs(r - r1) <= tol or abs(r - r2) <= tol
    status = Location.ON_GAMMA if on else Location.INSIDE
    return Membership(status, th, min(max(lam, 0.0), 1.0), k)


# ---------------------------------------------------------------------------
# arc length

def _speed(spec: DomainSpec, lam, theta):
    r1, r2 = spec.radii(theta)
    d1, d2 = spec.radii(theta, 1)
    R = r1 + lam * (r2 - r1)
    dR = d1 + lam * (d2 - d1)
    return np.sqrt(R * R + dR * dR)


def arc_length(spec: DomainSpec, lam, theta, tol: float = 1e-10):
    """s_lam(theta): length of the curve X_lam from theta0 to theta.

    Vectorised over broadcast ``lam``/``theta``; returns a float for scalar
    input.
    """
    lam_a, th_a = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(theta, dtype=float))
    if np.any((lam_a < 0) | (lam_a > 1)):
        raise ValueError("lam must lie in [0, 1]")
    if np.any(th_a < spec.theta0):
        raise ValueError("theta must be >= theta0")
    lam_f = lam_a.ravel()
    out = adaptive_simpson(lambda t, owner: _speed(spec, lam_f[owner], t),
                           np.full(lam_f.shape, spec.theta0), th_a.ravel(), tol=tol)
    out = out.reshape(lam_a.shape)
    return float(out) if out.ndim == 0 else out


def arc_length_table(spec: DomainSpec, lams, thetas, tol: float = 1e-10):
    """s_lam(theta) for every pair of a lam vector and a sorted theta vector.

    Integrates consecutive theta segments in one batch and accumulates, which
    is far cheaper than integrating from theta0 for every node.
    Returns an array of shape (len(lams), len(thetas)).
    """
    lams = np.asarray(lams, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.diff(thetas) < 0):
        raise ValueError("thetas must be sorted")
    nl, nt = lams.size, thetas.size
    first = arc_length(spec, lams, np.full(nl, thetas[0]), tol=tol) if thetas[0] > spec.theta0 \
        else np.zeros(nl)
    lam_seg = np.repeat(lams, nt - 1)
    a = np.tile(thetas[:-1], nl)
    b = np.tile(thetas[1:], nl)
    seg = adaptive_simpson(lambda t, owner: _speed(spec, lam_seg[owner], t), a, b,
                           tol=tol / max(nt - 1, 1))
    seg = seg.reshape(nl, nt - 1)
    table = np.empty((nl, nt))
    table[:, 0] = first
    table[:, 1:] = first[:, None] + np.cumsum(seg, axis=1)
    return table


def arc_distance(spec: DomainSpec, p: DomainPoint, tol: float = 1e-10) -> float:
    """Arc-distance from the cross-section S_theta0 to ``p`` along the domain."""
    if not spec.validated and not np.isfinite(spec.mu0):
        raise MissingArcData("domain lacks derivative data")
    return arc_length(spec, p.lam, p.theta, tol=tol)


def cross_section(spec: DomainSpec, theta: float, n: int) -> list:
    if n < 2:
        raise ValueError("need n >= 2")
    return [DomainPoint.from_strip(spec, j / (n - 1), theta) for j in range(n)]


def tail_epsilon_data(spec: DomainSpec, eps: float, n: int = 20_001):
    """(Theta_eps, L_eps) such that r_i <= r_star + eps/2 and |r_i'| <= mu_star + eps/2
    on [Theta_eps, theta_max], and L_eps = R_bar (Theta_eps - theta0) + L_star(Theta_eps).

    Sampled on [theta0, theta_max]; raises MissingArcData when the window does
    not reach that regime.
    """
    th = np.linspace(spec.theta0, spec.theta_max, n)
    r1, r2 = spec.radii(th)
    d1, d2 = spec.radii(th, 1)
    good = (np.maximum(r1, r2) <= spec.r_star + eps / 2) & \
           (np.maximum(np.abs(d1), np.abs(d2)) <= spec.mu_star + eps / 2)
    # last index where the condition fails
    bad = np.nonzero(~good)[0]
    if bad.size == 0:
        Theta_eps = spec.theta0
    elif bad[-1] == n - 1:
        raise MissingArcData(f"tail condition for eps={eps} not reached before theta_max")
    else:
        Theta_eps = float(th[bad[-1] + 1])
    Theta_eps = max(Theta_eps, spec.Theta)
    L_eps = spec.r_bar * (Theta_eps - spec.theta0)
    if Theta_eps > spec.theta0:
        L_eps += _abs_derivative_integral(spec.curves, spec.theta0, Theta_eps)
    return Theta_eps, L_eps


def replace(spec: DomainSpec, **changes) -> DomainSpec:
    return dataclasses.replace(spec, **changes)
