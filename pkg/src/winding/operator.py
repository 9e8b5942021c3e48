"""Coefficient fields, the non-divergence operator and its barrier functions.

Sign convention used throughout the package::

    L u = - sum_ij a_ij D_ij u + b . grad u

Coefficient callables take ``(x1, x2, theta)`` where ``theta`` is the
unwrapped polar angle of the point (needed by angle-dependent drifts).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .constants import DriftGrowth, EllipticityData, GrowthConstants, mt1_check
from .errors import DegenerateEllipticity
from .geometry import DomainSpec, strip_to_cartesian


def _zeros_like(x1):
    return np.zeros(np.shape(x1))


def _ones_like(x1):
    return np.ones(np.shape(x1))


def _angle(x1, x2, theta):
    return np.arctan2(x2, x1) if theta is None else np.asarray(theta, dtype=float)


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """A(x) as (a11, a12, a22), b(x) as (b1, b2) and f(x), all vectorised.

    ``c0``/``M1``/``M2``/``m`` are the exact constants of a preset, or None
    for custom fields (then :func:`validate_ellipticity` samples them).
    """

    A: Callable
    b: Callable
    f: Callable
    preset: str = "Custom"
    drift: str = "Custom"
    params: dict = field(default_factory=dict)
    c0: Optional[float] = None
    M1: Optional[float] = None
    M2: Optional[float] = None
    m: Optional[DriftGrowth] = None

    def with_drift(self, drift: "CoefficientField") -> "CoefficientField":
        """Take the drift (and its bound) from another field."""
        params = dict(self.params)
        params.update({k: v for k, v in drift.params.items() if k.startswith("drift")})
        return replace(self, b=drift.b, drift=drift.drift, M2=drift.M2, m=drift.m, params=params)

    def with_forcing(self, f: Callable) -> "CoefficientField":
        return replace(self, f=f)

    @property
    def bounded(self) -> bool:
        return self.m is None

    def eval(self, x1, x2, theta=None):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        a11, a12, a22 = self.A(x1, x2, theta)
        b1, b2 = self.b(x1, x2, theta)
        sh = np.broadcast(x1, x2).shape
        return tuple(np.broadcast_to(np.asarray(v, dtype=float), sh)
                     for v in (a11, a12, a22, b1, b2))


def _no_drift(x1, x2, theta=None):
    z = _zeros_like(np.broadcast_arrays(x1, x2)[0])
    return z, z


def _no_forcing(x1, x2, theta=None):
    return _zeros_like(np.broadcast_arrays(x1, x2)[0])


def laplacian() -> CoefficientField:
    def A(x1, x2, theta=None):
        o = _ones_like(np.broadcast_arrays(x1, x2)[0])
        return o, 0 * o, o

    return CoefficientField(A, _no_drift, _no_forcing, preset="Laplacian", drift="Zero",
                            c0=1.0, M1=2.0, M2=0.0)


def diagonal(a11: float, a22: float) -> CoefficientField:
    """Constant diagonal A; handy for checking the sampled constants."""
    def A(x1, x2, theta=None):
        o = _ones_like(np.broadcast_arrays(x1, x2)[0])
        return a11 * o, 0 * o, a22 * o

    return CoefficientField(A, _no_drift, _no_forcing, preset="Custom", drift="Zero",
                            params={"a11": a11, "a22": a22})


def rotated(c0: float, M1: float) -> CoefficientField:
    """A = c0 e_r e_r^T + (M1 - c0) e_phi e_phi^T: eigenvalues c0 and M1 - c0."""
    if not 0 < c0 <= M1 - c0:
        raise ValueError("rotated preset needs 0 < c0 <= M1 - c0")
    t = M1 - c0

    def A(x1, x2, theta=None):
        phi = _angle(x1, x2, theta)
        c, s = np.cos(phi), np.sin(phi)
        return c0 * c * c + t * s * s, (c0 - t) * c * s, c0 * s * s + t * c * c

    return CoefficientField(A, _no_drift, _no_forcing, preset="RotatedAnisotropic", drift="Zero",
                            params={"c0": c0, "M1": M1}, c0=c0, M1=M1, M2=0.0)


def zero_drift() -> CoefficientField:
    return CoefficientField(None, _no_drift, None, drift="Zero", M2=0.0)


def const_drift(bx: float, by: float) -> CoefficientField:
    def b(x1, x2, theta=None):
        o = _ones_like(np.broadcast_arrays(x1, x2)[0])
        return bx * o, by * o

    return CoefficientField(None, b, None, drift="ConstantVector",
                            params={"drift_bx": bx, "drift_by": by}, M2=math.hypot(bx, by))


def logangular_drift(alpha: float) -> CoefficientField:
    """b = alpha ln(max(theta, 1)) e_theta, unbounded along the winding."""
    m = DriftGrowth("log", alpha)

    def b(x1, x2, theta=None):
        phi = _angle(x1, x2, theta)
        mag = m(phi)
        return -mag * np.sin(phi), mag * np.cos(phi)

    return CoefficientField(None, b, None, drift="AngularGrowth", params={"drift_alpha": alpha},
                            M2=None, m=m)


def custom_field(A: Callable, b: Callable = None, f: Callable = None) -> CoefficientField:
    return CoefficientField(A, b or _no_drift, f or _no_forcing)


@dataclass(frozen=True)
class SmoothFunction:
    """Test function with optional analytic derivatives.

    ``grad`` returns (u1, u2), ``hess`` returns (u11, u12, u22).
    """

    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __call__(self, x1, x2):
        return self.value(x1, x2)


def _fd_derivatives(u, x1, x2, h):
    f = u.value if isinstance(u, SmoothFunction) else u
    u0 = f(x1, x2)
    up, um = f(x1 + h, x2), f(x1 - h, x2)
    vp, vm = f(x1, x2 + h), f(x1, x2 - h)
    g1 = (up - um) / (2 * h)
    g2 = (vp - vm) / (2 * h)
    h11 = (up - 2 * u0 + um) / h**2
    h22 = (vp - 2 * u0 + vm) / h**2
    h12 = (f(x1 + h, x2 + h) - f(x1 + h, x2 - h) - f(x1 - h, x2 + h) + f(x1 - h, x2 - h)) / (4 * h * h)
    return (g1, g2), (h11, h12, h22)


def apply_L(fld: CoefficientField, u, x1, x2, theta=None, h: Optional[float] = None):
    """L u at the given points.

    Analytic derivatives of a :class:`SmoothFunction` are used unless ``h``
    is given (or missing), in which case central differences with step h.
    """
    a11, a12, a22, b1, b2 = fld.eval(x1, x2, theta)
    analytic = isinstance(u, SmoothFunction) and u.grad is not None and u.hess is not None
    if analytic and h is None:
        g1, g2 = u.grad(x1, x2)
        u11, u12, u22 = u.hess(x1, x2)
    else:
        (g1, g2), (u11, u12, u22) = _fd_derivatives(u, np.asarray(x1, float),
                                                    np.asarray(x2, float), 1e-4 if h is None else h)
    return -(a11 * u11 + 2 * a12 * u12 + a22 * u22) + b1 * g1 + b2 * g2


def sample_domain(spec: DomainSpec, n: int, rng=None, theta_max=None):
    """Uniform (lambda, theta) samples mapped to the plane: (lam, theta, x1, x2)."""
    rng = np.random.default_rng(0) if rng is None else rng
    tmax = spec.theta_max if theta_max is None else theta_max
    lam = rng.uniform(0, 1, n)
    th = rng.uniform(spec.theta0, tmax, n)
    x1, x2 = strip_to_cartesian(spec, lam, th)
    return lam, th, x1, x2


def validate_ellipticity(fld: CoefficientField, spec: DomainSpec, n_samples: int = 1000,
                         kappa: Optional[float] = None, seed: int = 0) -> EllipticityData:
    """Ellipticity and drift constants: exact for presets, sampled otherwise.

    Sampled values carry the safety factors 0.99 (c0) and 1.01 (M1, M2).
    For the angular-growth drift the returned kappa defaults to the larger of
    0.2 and exp(-1/alpha), the smallest value keeping the divergence
    condition intact.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    _, th, x1, x2 = sample_domain(spec, n_samples, np.random.default_rng(seed))
    a11, a12, a22, b1, b2 = fld.eval(x1, x2, th)
    tr = a11 + a22
    disc = np.sqrt(0.25 * (a11 - a22) ** 2 + a12**2)
    lam_min = 0.5 * tr - disc
    if not np.all(lam_min > 0):
        k = int(np.argmin(lam_min))
        raise DegenerateEllipticity(
            f"A has eigenvalue {lam_min[k]:.3g} <= 0 at x=({x1[k]:.6g}, {x2[k]:.6g})")
    sampled = fld.c0 is None or fld.M1 is None
    if sampled:
        c0 = 0.99 * float(lam_min.min())
        M1 = max(1.01 * float(tr.max()), 2 * c0)
    else:
        c0, M1 = fld.c0, fld.M1
    if fld.m is not None:
        if fld.m.kind == "log" and fld.m.alpha > 0:
            default_kappa = max(0.2, math.exp(-1.0 / fld.m.alpha))
        else:
            default_kappa = 0.2
        kap = default_kappa if kappa is None else kappa
        return EllipticityData(c0, M1, m=fld.m, kappa=kap, Theta_bar=max(spec.theta0, 1.0),
                               sampled=sampled, note=f"mt1 {mt1_check(fld.m, kap)}")
    if fld.M2 is not None:
        M2 = fld.M2
    else:
        M2 = 1.01 * float(np.hypot(b1, b2).max())
        sampled = True
    return EllipticityData(c0, M1, M2=M2, sampled=sampled,
                           note="sampled bound" if sampled else "")


# ---------------------------------------------------------------------------
# barriers

@dataclass(frozen=True)
class BarrierSpec:
    """V(x) = |x - x_star|^(-s); a sub-solution when s >= e0 - 2."""

    x_star: tuple
    s: float
    e0: float
    checked: bool = True

    def __post_init__(self):
        if self.checked and not (self.s > 0 and self.s >= self.e0 - 2 - 1e-12):
            raise ValueError(f"barrier exponent s={self.s} must be positive and >= e0-2={self.e0 - 2}")


def barrier_residual(fld: CoefficientField, bs: BarrierSpec, x1, x2, theta=None):
    """L|x - x*|^(-s) in closed form.

    With y = x - x*, rho = |y| and a* = y.Ay / rho^2 this is
    -a* s rho^(-s-2) [s + 2 - (Tr A - b.y)/a*].
    """
    a11, a12, a22, b1, b2 = fld.eval(x1, x2, theta)
    y1 = np.asarray(x1, dtype=float) - bs.x_star[0]
    y2 = np.asarray(x2, dtype=float) - bs.x_star[1]
    rho2 = y1 * y1 + y2 * y2
    a_star = (a11 * y1 * y1 + 2 * a12 * y1 * y2 + a22 * y2 * y2) / rho2
    s = bs.s
    return -a_star * s * rho2 ** (-(s + 2) / 2) * (s + 2 - (a11 + a22 - (b1 * y1 + b2 * y2)) / a_star)


def barrier_function(bs: BarrierSpec) -> SmoothFunction:
    """The barrier as a SmoothFunction (for finite-difference cross-checks)."""
    xs1, xs2 = bs.x_star
    s = bs.s

    def value(x1, x2):
        return ((x1 - xs1) ** 2 + (x2 - xs2) ** 2) ** (-s / 2)

    def grad(x1, x2):
        y1, y2 = x1 - xs1, x2 - xs2
        c = -s * (y1 * y1 + y2 * y2) ** (-s / 2 - 1)
        return c * y1, c * y2

    def hess(x1, x2):
        y1, y2 = x1 - xs1, x2 - xs2
        r2 = y1 * y1 + y2 * y2
        c = -s * r2 ** (-s / 2 - 1)
        d = s * (s + 2) * r2 ** (-s / 2 - 2)
        return c + d * y1 * y1, d * y1 * y2, c + d * y2 * y2

    return SmoothFunction(value, grad, hess)


def barrier_e0(fld_or_ell, x_star, x1, x2) -> float:
    """e0 = (M1 + M2 R*)/c0 with R* the largest sampled distance to x*."""
    ell = fld_or_ell
    R = float(np.hypot(np.asarray(x1) - x_star[0], np.asarray(x2) - x_star[1]).max())
    return (ell.M1 + ell.M2 * R) / ell.c0


def window_barrier(spec: DomainSpec, gc: GrowthConstants, ell: EllipticityData,
                   theta_bar: float) -> BarrierSpec:
    """Barrier of the growth lemma for the window [theta_bar, theta_bar + 2 theta*]:
    x* on the middle ray at radius r* + d0 + d*."""
    rad = spec.r_star + gc.d0 + gc.d_star
    phi = theta_bar + gc.theta_star
    e0 = (ell.M1 + ell.M2 * rad) / ell.c0
    return BarrierSpec((rad * math.cos(phi), rad * math.sin(phi)), gc.s, e0)


def exp_barrier_residual(fld: CoefficientField, K0: float, eps: float, x1, x2, theta=None):
    """L applied to w = -(1 - eps exp(K0 x1)), i.e. -eps K0 (a11 K0 - b1) exp(K0 x1)."""
    a11, _, _, b1, _ = fld.eval(x1, x2, theta)
    return -eps * K0 * (a11 * K0 - b1) * np.exp(K0 * np.asarray(x1, dtype=float))


def exp_barrier_function(K0: float, eps: float) -> SmoothFunction:
    def value(x1, x2):
        return -(1 - eps * np.exp(K0 * x1)) + 0 * x2

    def grad(x1, x2):
        return eps * K0 * np.exp(K0 * x1), 0 * x2

    def hess(x1, x2):
        return eps * K0 * K0 * np.exp(K0 * x1), 0 * x2, 0 * x2

    return SmoothFunction(value, grad, hess)
