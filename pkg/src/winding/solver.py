"""Finite differences for L u = f on the truncated winding domain.

The domain is pulled back to the strip (lambda, theta) in [0,1] x [theta0,
theta_max] through x = R_lambda(theta) (cos theta, sin theta).  Unknowns are
ordered with lambda fastest: k = j * n_lambda + i.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MixedDerivativeDominance, SingularJacobian, SolveFailure
from .geometry import DomainSpec, strip_to_cartesian
from .operator import CoefficientField

RESIDUAL_TOL = 1e-10
SCHEMES = ("hybrid", "upwind", "central")


@dataclass(frozen=True)
class StripGrid:
    n_lambda: int
    n_theta: int
    theta0: float
    theta_max: float

    def __post_init__(self):
        if self.n_lambda < 3 or self.n_theta < 3:
            raise ValueError("need at least 3 nodes in each direction")
        if not self.theta_max > self.theta0:
            raise ValueError("theta_max must exceed theta0")

    @property
    def lam(self):
        return np.linspace(0.0, 1.0, self.n_lambda)

    @property
    def theta(self):
        return np.linspace(self.theta0, self.theta_max, self.n_theta)

    @property
    def h_lambda(self):
        return 1.0 / (self.n_lambda - 1)

    @property
    def h_theta(self):
        return (self.theta_max - self.theta0) / (self.n_theta - 1)

    @property
    def size(self):
        return self.n_lambda * self.n_theta

    def mesh(self):
        """(lam, theta) arrays of shape (n_theta, n_lambda)."""
        L, T = np.meshgrid(self.lam, self.theta)
        return L, T

    def masks(self):
        """Boolean masks (n_theta, n_lambda) for gamma1, gamma2, inner and far sides."""
        shape = (self.n_theta, self.n_lambda)
        g1 = np.zeros(shape, bool)
        g1[:, 0] = True
        g2 = np.zeros(shape, bool)
        g2[:, -1] = True
        inner = np.zeros(shape, bool)
        inner[0, :] = True
        far = np.zeros(shape, bool)
        far[-1, :] = True
        return {"gamma1": g1, "gamma2": g2, "inner": inner, "far": far}

    def boundary_mask(self):
        m = self.masks()
        return m["gamma1"] | m["gamma2"] | m["inner"] | m["far"]


Side = Union[float, Callable]


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data on the four sides.

    Each side is a constant or a callable ``g(lam, theta, x1, x2)``.  The cross
    sections (inner, far) own the corner nodes.
    """

    inner: Side = 0.0
    gamma1: Side = 0.0
    gamma2: Side = 0.0
    far: Side = 0.0

    @classmethod
    def uniform(cls, g: Side) -> "BoundaryData":
        return cls(g, g, g, g)

    @classmethod
    def gamma(cls, g: Side, inner: Side = None, far: Side = None) -> "BoundaryData":
        return cls(g if inner is None else inner, g, g, g if far is None else far)

    def evaluate(self, grid: StripGrid, spec: DomainSpec):
        L, T = grid.mesh()
        X1, X2 = strip_to_cartesian(spec, L, T)
        out = np.zeros(L.shape)
        m = grid.masks()
        for name in ("gamma1", "gamma2", "inner", "far"):
            g = getattr(self, name)
            sel = m[name]
            if callable(g):
                out[sel] = np.broadcast_to(g(L[sel], T[sel], X1[sel], X2[sel]), L[sel].shape)
            else:
                out[sel] = float(g)
        return out


@dataclass
class StripCoefficients:
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray


def transform_coefficients(fld: CoefficientField, spec: DomainSpec, lam, theta) -> StripCoefficients:
    """Strip-chart coefficients of L at the nodes (lam, theta) (broadcast).

    The pulled-back operator is
    -(a11 u_ll + 2 a12 u_lt + a22 u_tt) + b1 u_l + b2 u_t.
    """
    lam, theta = np.broadcast_arrays(np.asarray(lam, float), np.asarray(theta, float))
    r1, r2 = spec.radii(theta, 0)
    d1, d2 = spec.radii(theta, 1)
    s1, s2 = spec.radii(theta, 2)
    w, dw, sw = r2 - r1, d2 - d1, s2 - s1
    if np.any(w < 1e-14):
        raise SingularJacobian("gap r2 - r1 below 1e-14")
    r = r1 + lam * w
    c, s = np.cos(theta), np.sin(theta)
    a11, a12, a22, b1, b2 = fld.eval(r * c, r * s, theta)
    # A and b in the polar frame (e_r, e_phi)
    Arr = a11 * c * c + 2 * a12 * c * s + a22 * s * s
    Arp = (a22 - a11) * c * s + a12 * (c * c - s * s)
    App = a11 * s * s - 2 * a12 * c * s + a22 * c * c
    br = b1 * c + b2 * s
    bp = -b1 * s + b2 * c
    # derivatives of lambda(r, theta)
    g_r = 1.0 / w
    g_t = -(d1 + lam * dw) / w
    g_rt = -dw / w**2
    g_tt = -s1 / w + 2 * d1 * dw / w**2 + 2 * lam * dw**2 / w**2 - lam * sw / w
    # grad lambda = (g_r, g_t / r), grad theta = (0, 1 / r) in the polar frame
    gl_r, gl_p = g_r, g_t / r
    inv_r = 1.0 / r
    A11 = Arr * gl_r**2 + 2 * Arp * gl_r * gl_p + App * gl_p**2
    A12 = (Arp * gl_r + App * gl_p) * inv_r
    A22 = App * inv_r**2
    A_hess_theta = -2 * Arp * inv_r**2
    A_hess_lam = (2 * g_rt * Arp * inv_r + g_tt * App * inv_r**2 + g_r * App * inv_r
                  + g_t * A_hess_theta)
    B1 = br * gl_r + bp * gl_p - A_hess_lam
    B2 = bp * inv_r - A_hess_theta
    return StripCoefficients(A11, A12, A22, B1, B2)


def strip_operator(co: StripCoefficients, derivs):
    """Apply the strip operator to (u_l, u_t, u_ll, u_lt, u_tt)."""
    ul, ut, ull, ult, utt = derivs
    return -(co.a11 * ull + 2 * co.a12 * ult + co.a22 * utt) + co.b1 * ul + co.b2 * ut


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: StripGrid
    spec: DomainSpec
    boundary_values: np.ndarray
    flagged: np.ndarray  # (j, i) indices violating the mixed-term condition
    scheme: str
    field: Optional[CoefficientField] = None

    @property
    def m_matrix_ok(self) -> bool:
        return self.flagged.shape[0] == 0


def assemble(fld: CoefficientField, spec: DomainSpec, grid: StripGrid, bc: BoundaryData,
             f_strip: Optional[Callable] = None, scheme: str = "hybrid",
             warn: bool = True) -> LinearSystem:
    """Nine-point system for the strip-chart operator with Dirichlet rows on the boundary.

    Second derivatives are central; the mixed term uses the seven-point
    stencil tilted along the sign of a12.  Drift: ``upwind`` is first order,
    ``hybrid`` takes the central difference wherever it keeps the
    off-diagonal entries nonpositive and upwinds elsewhere, ``central`` never
    upwinds (no sign guarantee).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    nl, nt = grid.n_lambda, grid.n_theta
    hl, ht = grid.h_lambda, grid.h_theta
    lam_i = grid.lam[1:-1]
    th_j = grid.theta[1:-1]
    L, T = np.meshgrid(lam_i, th_j)
    co = transform_coefficients(fld, spec, L, T)
    a11, a12, a22, b1, b2 = co.a11, co.a12, co.a22, co.b1, co.b2

    if f_strip is not None:
        rhs_int = np.broadcast_to(f_strip(L, T), L.shape).astype(float)
    else:
        X1, X2 = strip_to_cartesian(spec, L, T)
        rhs_int = np.broadcast_to(fld.f(X1, X2, T), L.shape).astype(float)

    hh = hl * ht
    pos = a12 >= 0
    m12 = np.abs(a12) / hh
    flagged_mask = np.abs(a12) > (1 + 1e-12) * np.minimum(a11 * ht / hl, a22 * hl / ht)

    # second-order part: coefficient of neighbour (di, dj)
    cE = -a11 / hl**2 + m12          # (i+1, j)
    cW = -a11 / hl**2 + m12          # (i-1, j)
    cN = -a22 / ht**2 + m12          # (i, j+1)
    cS = -a22 / ht**2 + m12          # (i, j-1)
    cNE = np.where(pos, -m12, 0.0)
    cSW = np.where(pos, -m12, 0.0)
    cSE = np.where(pos, 0.0, -m12)   # (i+1, j-1)
    cNW = np.where(pos, 0.0, -m12)   # (i-1, j+1)
    diag = 2 * a11 / hl**2 + 2 * a22 / ht**2 - 2 * m12

    def drift(b, h, c_plus, c_minus, diag):
        cen_p = c_plus + b / (2 * h)
        cen_m = c_minus - b / (2 * h)
        up_p = c_plus + np.where(b < 0, b / h, 0.0)
        up_m = c_minus - np.where(b > 0, b / h, 0.0)
        up_d = diag + np.abs(b) / h
        if scheme == "central":
            use_c = np.ones(b.shape, bool)
        elif scheme == "upwind":
            use_c = np.zeros(b.shape, bool)
        else:
            use_c = (cen_p <= 0) & (cen_m <= 0)
        return (np.where(use_c, cen_p, up_p), np.where(use_c, cen_m, up_m),
                np.where(use_c, diag, up_d))

    cE, cW, diag = drift(b1, hl, cE, cW, diag)
    cN, cS, diag = drift(b2, ht, cN, cS, diag)

    # interior rows are scaled to unit diagonal; the coefficient scale varies
    # with the gap width by many orders of magnitude along the winding
    I, J = np.meshgrid(np.arange(1, nl - 1), np.arange(1, nt - 1))
    k = (J * nl + I).ravel()
    dflat = diag.ravel()
    rows, cols, vals = [k], [k], [np.ones(k.size)]
    for c, di, dj in ((cE, 1, 0), (cW, -1, 0), (cN, 0, 1), (cS, 0, -1),
                      (cNE, 1, 1), (cSW, -1, -1), (cSE, 1, -1), (cNW, -1, 1)):
        cv = c.ravel() / dflat
        keep = cv != 0
        rows.append(k[keep])
        cols.append(((J + dj) * nl + (I + di)).ravel()[keep])
        vals.append(cv[keep])

    bmask = grid.boundary_mask().ravel()
    kb = np.nonzero(bmask)[0]
    rows.append(kb)
    cols.append(kb)
    vals.append(np.ones(kb.size))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.size, grid.size))

    gvals = bc.evaluate(grid, spec)
    rhs = np.zeros(grid.size)
    rhs[kb] = gvals.ravel()[kb]
    rhs[k] = rhs_int.ravel() / dflat

    flagged = np.argwhere(flagged_mask) + 1
    if warn and flagged.size:
        warnings.warn(MixedDerivativeDominance(
            f"{flagged.shape[0]} nodes violate |a12| <= min(a11 h_t/h_l, a22 h_l/h_t); "
            "discrete maximum principle not guaranteed"), stacklevel=2)
    return LinearSystem(A, rhs, grid, spec, gvals, flagged, scheme, fld)


@dataclass
class GridSolution:
    grid: StripGrid
    spec: DomainSpec
    values: np.ndarray  # (n_theta, n_lambda)
    residual: float
    boundary_values: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), int))

    @property
    def cross_max(self):
        return self.values.max(axis=1)

    @property
    def cross_min(self):
        return self.values.min(axis=1)

    @property
    def cross_osc(self):
        return self.cross_max - self.cross_min

    def cartesian(self):
        L, T = self.grid.mesh()
        return strip_to_cartesian(self.spec, L, T)

    def records(self):
        """Rows (lambda, theta, x1, x2, u), lambda fastest."""
        L, T = self.grid.mesh()
        X1, X2 = strip_to_cartesian(self.spec, L, T)
        return np.column_stack([a.ravel() for a in (L, T, X1, X2, self.values)])

    def interpolate(self, lam, theta):
        """Bilinear interpolation of the grid values at strip coordinates."""
        g = self.grid
        lam = np.asarray(lam, float)
        theta = np.asarray(theta, float)
        fi = np.clip(lam / g.h_lambda, 0, g.n_lambda - 1 - 1e-12)
        fj = np.clip((theta - g.theta0) / g.h_theta, 0, g.n_theta - 1 - 1e-12)
        i = np.floor(fi).astype(int)
        j = np.floor(fj).astype(int)
        ti, tj = fi - i, fj - j
        V = self.values
        return ((1 - ti) * (1 - tj) * V[j, i] + ti * (1 - tj) * V[j, i + 1]
                + (1 - ti) * tj * V[j + 1, i] + ti * tj * V[j + 1, i + 1])


def solve(system: LinearSystem) -> GridSolution:
    """Sparse LU solve; relative residual must reach 1e-10."""
    A = system.matrix.tocsc()
    b = system.rhs
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SolveFailure(f"factorisation failed: {exc}") from exc
    x = lu.solve(b)

    def rel_res(x):
        r = A @ x - b
        scale = abs(A).max() * np.abs(x).max() + np.abs(b).max()
        return float(np.abs(r).max() / scale) if scale > 0 else 0.0

    res = rel_res(x)
    for _ in range(2):
        if not np.isfinite(res) or res <= RESIDUAL_TOL:
            break
        x = x - lu.solve(A @ x - b)
        res = rel_res(x)
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL:
        raise SolveFailure(f"relative residual {res:.3g} above {RESIDUAL_TOL:g}")
    g = system.grid
    return GridSolution(g, system.spec, x.reshape(g.n_theta, g.n_lambda), res,
                        system.boundary_values, system.flagged)


def solve_problem(fld, spec, grid, bc, f_strip=None, scheme="hybrid", warn=True) -> GridSolution:
    return solve(assemble(fld, spec, grid, bc, f_strip=f_strip, scheme=scheme, warn=warn))


@dataclass(frozen=True)
class CrossProfiles:
    theta: np.ndarray
    maxpos: np.ndarray
    maxneg: np.ndarray
    maxabs: np.ndarray
    osc: np.ndarray

    def rows(self):
        return np.column_stack([self.theta, self.maxpos, self.maxneg, self.maxabs, self.osc])


def cross_profiles(sol: GridSolution) -> CrossProfiles:
    V = sol.values
    return CrossProfiles(sol.grid.theta.copy(), np.maximum(V, 0).max(axis=1),
                         np.maximum(-V, 0).max(axis=1), np.abs(V).max(axis=1),
                         V.max(axis=1) - V.min(axis=1))


# ---------------------------------------------------------------------------
# manufactured solutions

@dataclass(frozen=True)
class StripFunction:
    """u(lam, theta) with its first and second partial derivatives."""

    value: Callable
    derivs: Callable  # -> (u_l, u_t, u_ll, u_lt, u_tt)

    def __call__(self, lam, theta):
        return self.value(lam, theta)


def sine_exp_solution(theta0: float = 0.0) -> StripFunction:
    """u = sin(pi lam) exp(-(theta - theta0))."""
    pi = math.pi

    def value(l, t):
        return np.sin(pi * l) * np.exp(-(t - theta0))

    def derivs(l, t):
        s, c, e = np.sin(pi * l), np.cos(pi * l), np.exp(-(t - theta0))
        return pi * c * e, -s * e, -pi * pi * s * e, -pi * c * e, s * e

    return StripFunction(value, derivs)


def manufactured_forcing(fld: CoefficientField, spec: DomainSpec, u: StripFunction) -> Callable:
    """Strip-chart forcing f = L u for a known strip function."""
    def f(lam, theta):
        co = transform_coefficients(fld, spec, lam, theta)
        return strip_operator(co, u.derivs(*np.broadcast_arrays(lam, theta)))

    return f


def manufactured_error(fld, spec, grid, u: Optional[StripFunction] = None,
                       scheme: str = "hybrid") -> float:
    """Max nodal error of the discrete solution for a manufactured strip function."""
    u = sine_exp_solution(grid.theta0) if u is None else u
    bc = BoundaryData.uniform(lambda l, t, x1, x2: u(l, t))
    sol = solve_problem(fld, spec, grid, bc, f_strip=manufactured_forcing(fld, spec, u),
                        scheme=scheme, warn=False)
    L, T = grid.mesh()
    return float(np.abs(sol.values - u(L, T)).max())


def observed_orders(errors, ratio: float = 2.0):
    e = np.asarray(errors, float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)


# ---------------------------------------------------------------------------
# reference solver for a concentric annulus

def polar_laplace_reference(r_in: float, r_out: float, theta0: float, theta_max: float,
                            n_r: int, n_theta: int, g: Callable) -> np.ndarray:
    """Five-point Laplace solve in (r, theta) with Dirichlet data g(r, theta).

    Independent of the strip machinery; returns values of shape (n_theta, n_r).
    """
    r = np.linspace(r_in, r_out, n_r)
    t = np.linspace(theta0, theta_max, n_theta)
    hr = r[1] - r[0]
    ht = t[1] - t[0]
    R, T = np.meshgrid(r, t)
    idx = np.arange(n_r * n_theta).reshape(n_theta, n_r)
    interior = np.zeros_like(R, bool)
    interior[1:-1, 1:-1] = True
    rows, cols, vals = [], [], []
    ki = idx[interior]
    ri = R[interior]
    terms = [
        (0, 0, 2 / hr**2 + 2 / (ri * ht) ** 2),
        (0, 1, -1 / hr**2 - 1 / (2 * ri * hr)),
        (0, -1, -1 / hr**2 + 1 / (2 * ri * hr)),
        (1, 0, -1 / (ri * ht) ** 2),
        (-1, 0, -1 / (ri * ht) ** 2),
    ]
    jj, ii = np.nonzero(interior)
    for dj, di, v in terms:
        rows.append(ki)
        cols.append(idx[jj + dj, ii + di])
        vals.append(v)
    kb = idx[~interior]
    rows.append(kb)
    cols.append(kb)
    vals.append(np.ones(kb.size))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(idx.size, idx.size))
    rhs = np.zeros(idx.size)
    rhs[kb] = g(R[~interior], T[~interior])
    return spla.spsolve(A.tocsc(), rhs).reshape(n_theta, n_r)
