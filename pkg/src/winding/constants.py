"""Explicit growth-lemma constants and the decay/growth envelopes built from them.

Everything here is a closed-form evaluation or a one-dimensional search;
envelopes are returned as vectorised callables.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (KappaBarUnreachable, LengthMismatch, MissingArcData, NoAdmissibleEpsilon,
                     NoAdmissibleTheta, OrderingViolation)
from .geometry import DomainSpec, strip_to_cartesian, tail_epsilon_data
from .quadrature import adaptive_simpson

SEQ_RTOL = 1e-12


# ---------------------------------------------------------------------------
# data carriers

@dataclass(frozen=True)
class DriftGrowth:
    """Nondecreasing bound m(theta) on |b| along the domain.

    kind is one of ``const`` (m = alpha), ``log`` (m = alpha ln theta, taken as
    0 below theta = 1), ``power`` (m = alpha theta^p) or ``custom``.
    """

    kind: str
    alpha: float = 0.0
    power: float = 1.0
    func: Optional[Callable] = None

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "const":
            return np.full(theta.shape, float(self.alpha)) if theta.ndim else float(self.alpha)
        if self.kind == "log":
            return self.alpha * np.log(np.maximum(theta, 1.0))
        if self.kind == "power":
            return self.alpha * np.maximum(theta, 0.0) ** self.power
        return self.func(theta)


def mt1_check(m: DriftGrowth, kappa: float) -> str:
    """Does int^inf kappa^m(theta) dtheta diverge?  PASS / FAIL / UNKNOWN.

    Only the symbolic presets are decided; a numerical integral cannot tell
    divergence from slow convergence.
    """
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    if m.kind == "const" or (m.kind in ("log", "power") and m.alpha == 0):
        return "PASS"
    if m.kind == "log":
        # kappa^(alpha ln t) = t^(-alpha ln(1/kappa))
        return "PASS" if m.alpha * math.log(1 / kappa) <= 1 else "FAIL"
    if m.kind == "power":
        return "FAIL" if m.power > 0 and m.alpha > 0 else "PASS"
    return "UNKNOWN"


@dataclass(frozen=True)
class EllipticityData:
    c0: float
    M1: float
    M2: Optional[float] = None
    m: Optional[DriftGrowth] = None
    kappa: Optional[float] = None
    Theta_bar: Optional[float] = None
    sampled: bool = False
    note: str = ""

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if self.M1 < 2 * self.c0 * (1 - 1e-12):
            raise ValueError("M1 must be at least 2 c0 in two dimensions")
        if self.M2 is None:
            if self.m is None or self.kappa is None:
                raise ValueError("need M2 (bounded drift) or m and kappa (unbounded drift)")
            if not 0 < self.kappa < 1:
                raise ValueError("kappa must lie in (0, 1)")
        elif self.M2 < 0:
            raise ValueError("M2 must be nonnegative")

    @property
    def bounded(self) -> bool:
        return self.M2 is not None


@dataclass(frozen=True)
class GrowthConstants:
    d0: float
    theta_star: float
    d_star: float
    d_hat: float
    s: float
    eta_star: float
    nu: float
    C_star: float
    nu_prime: float = float("nan")
    C_star_prime: float = float("nan")
    k_star: float = float("nan")
    s_min: float = 0.0
    e0: float = float("nan")
    r_star: float = float("nan")

    @classmethod
    def from_eta(cls, eta_star: float, theta_star: float, **kw) -> "GrowthConstants":
        """Bundle carrying only the rate data (eta*, theta*); geometry fields NaN."""
        nan = float("nan")
        base = dict(d0=nan, d_star=nan, d_hat=nan, s=nan)
        base.update(kw)
        return cls(theta_star=theta_star, eta_star=eta_star,
                   nu=math.log(1 / eta_star) / theta_star, C_star=1 / eta_star, **base)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class UnboundedConstants:
    Theta0: float
    nu_bar: float
    kappa: float
    m: DriftGrowth
    kappa_bar: float = float("nan")
    d_bar0: float = float("nan")
    d_bar_star: float = float("nan")
    theta_bar_star: float = float("nan")
    lambda0: float = float("nan")
    z_bar: float = float("nan")
    s_bar1: float = float("nan")
    N: int = 0
    theta0: float = float("nan")
    mt1: str = "UNKNOWN"


@dataclass(frozen=True)
class DichotomyBranch:
    tag: str  # "Decay" | "Growth" | "Violation"
    products: tuple = ()
    i_star: Optional[int] = None
    lower_products: tuple = ()
    index: Optional[int] = None


@dataclass(frozen=True)
class InhomogeneousConstants:
    K0: float
    eps: float
    K1: float
    d1: float


# ---------------------------------------------------------------------------
# growth factor

def general_eta(d_star: float, D_S: float, d_Gamma: float, s: float) -> float:
    """Contraction factor 1 - [(d*/D_S)^s - (d*/d_Gamma)^s] of the general growth lemma."""
    if not s > 0:
        raise ValueError("s must be positive")
    if not D_S < d_Gamma:
        raise OrderingViolation(f"need D_S < d_Gamma (D_S={D_S}, d_Gamma={d_Gamma})")
    if not 0 < d_star <= D_S:
        raise OrderingViolation(f"need 0 < d* <= D_S (d*={d_star}, D_S={D_S})")
    return 1.0 - ((d_star / D_S) ** s - (d_star / d_Gamma) ** s)


def coscond_holds(r_star, d0, theta_star) -> bool:
    return 0 < theta_star < math.pi / 2 and math.cos(theta_star) < r_star / (r_star + d0)


def decond_bounds(r_star, d0, theta_star):
    """The two lower bounds on d* (barrier point beyond the tangent point, and
    the cross-section/side distance ordering)."""
    c = math.cos(theta_star)
    first = (r_star + d0) * (1.0 / c - 1.0)
    denom = 2.0 * ((r_star + d0) * (1.0 - c) - d0)
    second = d0 * d0 / denom if denom > 0 else math.inf
    return first, second


def hat_d(d_star, r_star, d0, theta_star):
    return math.sqrt(d_star**2 + 2 * d_star * (r_star + d0) * (1 - math.cos(theta_star)))


def s_lower_bound(c0, M1, M2, r_star, d0, d_star):
    """e0 - 2 with e0 = (M1 + M2 (r* + d0 + d*)) / c0."""
    return (M1 + M2 * (r_star + d0 + d_star)) / c0 - 2.0


def s_optimal(a, b):
    """Maximiser of a^s - b^s for 0 < b < a < 1."""
    return math.log(math.log(b) / math.log(a)) / math.log(a / b)


def _growth_bundle(spec: DomainSpec, ell: EllipticityData, theta_star, d0, d_star):
    r_star = spec.r_star
    dh = hat_d(d_star, r_star, d0, theta_star)
    e0 = s_lower_bound(ell.c0, ell.M1, ell.M2, r_star, d0, d_star) + 2.0
    s_min = max(e0 - 2.0, 0.0)
    a = d_star / (d_star + d0)
    b = d_star / dh
    s_opt = s_optimal(a, b) if b < a else float("nan")
    if not (s_opt > 0 and math.isfinite(s_opt)):
        s_opt = max(s_min, 1.0)
    s = max(s_min, s_opt)
    if b < a:
        eta = general_eta(d_star, d_star + d0, dh, s)
        gap = a**s - b**s
        nu = -math.log1p(-gap) / theta_star if gap > 0 else 0.0
    else:
        eta, nu = 1.0, 0.0
    C_star = 1.0 / eta
    scale = spec.r_bar + spec.mu0
    return GrowthConstants(
        d0=d0, theta_star=theta_star, d_star=d_star, d_hat=dh, s=s, eta_star=eta, nu=nu,
        C_star=C_star, nu_prime=nu / scale,
        C_star_prime=C_star * math.exp(nu * spec.L_star / scale),
        k_star=scale / r_star, s_min=s_min, e0=e0, r_star=r_star)


def _best_over_d_star(spec, ell, theta_star, d0, optimize):
    """Growth bundle at theta*, with d* on its lower bound when that gives a
    contraction, else (or when asked) the nu-maximising d* in (lower, 1e3 lower]."""
    if not coscond_holds(spec.r_star, d0, theta_star):
        raise NoAdmissibleTheta(
            f"cos(theta*) < r*/(r*+d0) fails for theta*={theta_star}, r*={spec.r_star}, d0={d0}")
    first, second = decond_bounds(spec.r_star, d0, theta_star)
    lower = max(first, second)
    at_bound = _growth_bundle(spec, ell, theta_star, d0, lower)
    # on the second bound D_S = d_Gamma up to rounding, so eta* is 1 there
    if first > second and at_bound.nu > 0 and not optimize:
        return at_bound

    def bundle(logf):
        return _growth_bundle(spec, ell, theta_star, d0, lower * math.exp(logf))

    grid = np.linspace(0.0, math.log(1e3), 31)
    grid[0] = 1e-6
    vals = [bundle(g).nu for g in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda g: -bundle(g).nu, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    best = max((bundle(float(res.x)), bundle(grid[k]), at_bound), key=lambda g: g.nu)
    return best


def admissible_theta_interval(r_star, d0):
    lo = math.acos(r_star / (r_star + d0))
    return lo, math.pi / 2


def annulus_constants(spec: DomainSpec, ell: EllipticityData, theta_star=None, d0=None,
                      optimize_d_star: bool = False) -> GrowthConstants:
    """Growth-lemma constants for the annular windows of the winding domain.

    ``theta_star=None`` picks theta* in the admissible interval maximising the
    decay rate nu.  d* sits on its lower bound when that already yields
    eta* < 1; at the second lower bound the two distances coincide and
    eta* = 1, so there (or with ``optimize_d_star``) d* is searched above it.
    """
    if not ell.bounded:
        raise ValueError("annulus_constants needs bounded-drift ellipticity data")
    d0 = spec.d0 if d0 is None else float(d0)
    if not d0 > 0:
        raise NoAdmissibleTheta("d0 must be positive")
    lo, hi = admissible_theta_interval(spec.r_star, d0)
    if not lo < hi:
        raise NoAdmissibleTheta("empty admissible interval for theta*")

    def best_for(theta):
        return _best_over_d_star(spec, ell, theta, d0, optimize_d_star)

    if theta_star is not None:
        return best_for(float(theta_star))

    width = hi - lo
    # the optimum often sits close to pi/2, so the scan is refined near that end
    grid = lo + width * np.concatenate((np.linspace(0.02, 0.98, 25), [0.99, 0.995, 0.999]))
    vals = [best_for(float(t)).nu for t in grid]
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: -best_for(t).nu, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-9 * width})
    return max((best_for(float(res.x)), best_for(float(grid[k]))), key=lambda g: g.nu)


# ---------------------------------------------------------------------------
# envelopes

def decay_envelope(gc: GrowthConstants, M0: float, theta0: float) -> Callable:
    """theta -> min(M0, C* M0 exp(-nu (theta - theta0)))."""
    if M0 < 0:
        raise ValueError("M0 must be nonnegative")

    def env(theta):
        t = np.asarray(theta, dtype=float)
        return np.minimum(M0, gc.C_star * M0 * np.exp(-gc.nu * (t - theta0)))

    return env


@dataclass(frozen=True)
class ArcEnvelope:
    nu_prime: float
    C_star_prime: float
    M0: float
    k_star: float
    k_eps: Optional[float] = None
    eps: Optional[float] = None
    Theta_eps: Optional[float] = None
    L_eps: Optional[float] = None

    def __call__(self, ell):
        return self.C_star_prime * self.M0 * np.exp(-self.nu_prime * np.asarray(ell, dtype=float))


def arc_envelope(spec: DomainSpec, gc: GrowthConstants, M0: float,
                 tighten: Optional[float] = None) -> ArcEnvelope:
    """ell -> C*' M0 exp(-nu' ell) in terms of the arc-distance ell.

    With ``tighten=eps`` (only when mu_star = 0) the slope bound R_bar + mu0 is
    replaced by r_star + eps and L* by L_eps, which remains valid for every
    theta >= theta0, and k_eps = (r*+eps)/r* + eps is reported.
    """
    for name in ("r_bar", "mu0", "L_star", "r_star"):
        v = getattr(spec, name)
        if v is None or not math.isfinite(v):
            raise MissingArcData(f"domain has no usable {name}")
    if M0 < 0:
        raise ValueError("M0 must be nonnegative")
    scale = spec.r_bar + spec.mu0
    k_star = scale / spec.r_star
    if tighten is None:
        return ArcEnvelope(gc.nu / scale, gc.C_star * math.exp(gc.nu * spec.L_star / scale), M0,
                           k_star)
    eps = float(tighten)
    if spec.mu_star != 0:
        raise MissingArcData("tightened arc envelope needs mu_star = 0")
    Theta_eps, L_eps = tail_epsilon_data(spec, eps)
    slope = spec.r_star + spec.mu_star + eps
    return ArcEnvelope(gc.nu / slope, gc.C_star * math.exp(gc.nu * L_eps / slope), M0, k_star,
                       k_eps=(spec.r_star + eps) / spec.r_star + eps, eps=eps,
                       Theta_eps=Theta_eps, L_eps=L_eps)


def oscillation_envelope(gc: GrowthConstants, osc_gamma: float, osc0: float,
                         theta0: float) -> Callable:
    """Bound on the oscillation over S_theta for solutions of Lu = 0.

    ``osc_gamma`` is the oscillation of the data on gamma, ``osc0`` the
    oscillation over S_theta0 together with gamma (which is also a bound at
    every theta).
    """
    if osc_gamma < 0 or osc0 < 0:
        raise ValueError("oscillations are nonnegative")

    def env(theta):
        e = np.exp(-gc.nu * (np.asarray(theta, dtype=float) - theta0))
        v = osc_gamma * (1 - gc.C_star * e) + gc.C_star * osc0 * e
        return np.minimum(np.maximum(v, 0.0), osc0)

    return env


def cumulative_integral(func, a0: float, thetas, tol=1e-10):
    """int_{a0}^{theta} func for each theta (0 where theta <= a0)."""
    th = np.asarray(thetas, dtype=float)
    flat = th.ravel()
    upper = np.maximum(flat, a0)
    order = np.argsort(upper)
    pts = np.concatenate(([a0], upper[order]))
    seg = adaptive_simpson(lambda t, _o: func(t), pts[:-1], pts[1:],
                           tol=tol / max(flat.size, 1))
    out = np.empty_like(flat)
    out[order] = np.cumsum(seg)
    return out.reshape(th.shape)


def unbounded_envelope(uc: UnboundedConstants, M0: float) -> Callable:
    """theta -> M0 min(1, exp(-nu_bar int_{Theta0}^theta kappa^m))."""
    if M0 < 0:
        raise ValueError("M0 must be nonnegative")

    def weight(t):
        return uc.kappa ** np.asarray(uc.m(t), dtype=float)

    def env(theta):
        I = cumulative_integral(weight, uc.Theta0, theta)
        return M0 * np.minimum(1.0, np.exp(-uc.nu_bar * I))

    return env


# ---------------------------------------------------------------------------
# unbounded drift

def unbounded_constants(spec: DomainSpec, ell: EllipticityData, theta_star: float,
                        n_samples: int = 20_001) -> UnboundedConstants:
    """Constants of the unbounded-drift estimate, following its construction step by step."""
    if ell.m is None or ell.kappa is None:
        raise ValueError("unbounded_constants needs m(theta) and kappa")
    r_star, d0, c0, M1, kappa = spec.r_star, spec.d0, ell.c0, ell.M1, ell.kappa
    if not coscond_holds(r_star, d0, theta_star):
        raise NoAdmissibleTheta(f"theta*={theta_star} violates the cosine condition")
    th_bar = theta_star / 2
    Theta_bar = spec.theta0 if ell.Theta_bar is None else max(ell.Theta_bar, spec.theta0)

    # eps* < d0, exp(-eps*/c0) > kappa, cos(th_bar) < r*/(r*+eps*)
    sup = min(d0, c0 * math.log(1 / kappa), r_star * (1 / math.cos(th_bar) - 1))
    if not sup > 0:
        raise NoAdmissibleEpsilon("no eps* satisfies the barred conditions")
    eps = sup / 2

    th = np.linspace(spec.theta0, spec.theta_max, n_samples)
    r2 = spec.radii(th)[1]
    suffix_max = np.maximum.accumulate(r2[::-1])[::-1]
    ok = np.nonzero(suffix_max <= r_star + eps)[0]
    if ok.size == 0:
        raise NoAdmissibleEpsilon(
            f"r2 does not drop below r*+eps*={r_star + eps:.6g} before theta_max")
    need = max(float(th[ok[0]]), Theta_bar)
    N = max(0, math.ceil((need - spec.theta0) / theta_star - 1e-12))
    theta_bar0 = spec.theta0 + N * theta_star

    def kk_ok(d):
        kb = d / (d + eps)
        return kb >= kappa and kb ** ((r_star + eps + d) / c0) >= kappa

    lower = max(decond_bounds(r_star, eps, th_bar))
    cap = 1e6
    if kk_ok(lower):
        d_bar = lower
    else:
        if not kk_ok(cap):
            raise KappaBarUnreachable("kappa-bar condition fails for every d-bar* up to 1e6")
        lo, hi = lower, cap
        while hi - lo > 1e-12 * hi:
            mid = 0.5 * (lo + hi)
            if kk_ok(mid):
                hi = mid
            else:
                lo = mid
        d_bar = hi
    kappa_bar = d_bar / (d_bar + eps)
    dh = hat_d(d_bar, r_star, eps, th_bar)
    z_bar = (d_bar + eps) / dh
    B1 = float(ell.m(theta_bar0 + 2 * th_bar))
    s1 = (M1 + B1 * (r_star + eps + d_bar)) / c0
    lambda0 = 1 - z_bar**s1
    nu_bar = lambda0 / th_bar * kappa ** (M1 / c0)
    return UnboundedConstants(
        Theta0=spec.theta0 + (N + 1) * theta_star, nu_bar=nu_bar, kappa=kappa, m=ell.m,
        kappa_bar=kappa_bar, d_bar0=eps, d_bar_star=d_bar, theta_bar_star=th_bar,
        lambda0=lambda0, z_bar=z_bar, s_bar1=s1, N=N, theta0=spec.theta0,
        mt1=mt1_check(ell.m, kappa))


# ---------------------------------------------------------------------------
# sequence dichotomy

def _le(x, y):
    return x <= y + SEQ_RTOL * max(abs(x), abs(y))


def classify_sequence(a: Sequence[float], lam: Sequence[float]) -> DichotomyBranch:
    """Decide which alternative of the discrete dichotomy a finite sequence shows.

    ``lam[k]`` is the factor for index ``k + 1``.  Either one factor per
    interior index (``len(a) - 2``) or one more, covering the last index too.
    """
    a = [float(v) for v in a]
    lam = [float(v) for v in lam]
    n = len(a) - 1
    if len(a) < 3 or len(lam) not in (n - 1, n):
        raise LengthMismatch(
            f"need len(a) >= 3 and len(lam) in (len(a)-2, len(a)-1); got {len(a)}, {len(lam)}")
    if any(v < 0 for v in a):
        raise ValueError("sequence entries must be nonnegative")
    if any(not 0 < v < 1 for v in lam):
        raise ValueError("factors must lie in (0, 1)")
    L = [None] + lam  # L[i] is the factor of index i
    for i in range(1, n):
        if not _le(a[i], L[i] * max(a[i - 1], a[i + 1])):
            return DichotomyBranch("Violation", index=i)
    last = len(lam)  # highest index with a factor
    if all(_le(a[i], L[i] * a[i - 1]) for i in range(1, last + 1)):
        prods, p = [], 1.0
        for i in range(1, last + 1):
            p *= L[i]
            prods.append(p)
        return DichotomyBranch("Decay", products=tuple(prods))
    for i_star in range(1, n + 1):
        if a[i_star] > 0 and all(_le(a[i - 1] / L[i - 1], a[i]) for i in range(i_star + 1, n + 1)):
            lows, p = [], 1.0
            for i in range(i_star + 1, n + 1):
                p *= L[i - 1]
                lows.append(a[i_star] / p)
            return DichotomyBranch("Growth", i_star=i_star, lower_products=tuple(lows))
    # unreachable when the interior inequality holds everywhere
    return DichotomyBranch("Violation", index=n)


# ---------------------------------------------------------------------------
# inhomogeneous problems

def kek_constants(c0: float, M2: float, d1: float) -> InhomogeneousConstants:
    K0 = (1 + M2) / c0
    eps = math.exp(-K0 * d1)
    K1 = math.exp(2 * K0 * d1) / K0
    return InhomogeneousConstants(K0=K0, eps=eps, K1=K1, d1=d1)


def inhomogeneous_constants(spec: DomainSpec, ell: EllipticityData, n_samples: int = 20_001,
                            theta_max: Optional[float] = None) -> InhomogeneousConstants:
    """K0, eps, K1 of the exponential comparison function, with d1 = sup |x1|
    over sampled points of gamma."""
    if not ell.bounded:
        raise ValueError("inhomogeneous_constants needs bounded drift")
    tmax = spec.theta_max if theta_max is None else theta_max
    th = np.linspace(spec.theta0, tmax, n_samples)
    d1 = 0.0
    for lam in (0.0, 1.0):
        x1, _ = strip_to_cartesian(spec, lam, th)
        d1 = max(d1, float(np.abs(x1).max()))
    return kek_constants(ell.c0, ell.M2, d1)
