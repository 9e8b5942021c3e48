"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runtime limits are part of each criterion and are asserted too.
"""
import itertools
import math
import time
import warnings
from contextlib import contextmanager

import numpy as np

from winding import constants as C
from winding import geometry as G
from winding import harness as H
from winding import operator as O
from winding import solver as S
from winding.errors import MixedDerivativeDominance


@contextmanager
def criterion(number, title, limit):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        ok = ok and dt < limit
        print(f"\ncriterion {number:2d} {title}: {'PASS' if ok else 'FAIL'} "
              f"({dt:.2f} s, limit {limit:g} s)")
    assert dt < limit, f"criterion {number} took {dt:.1f} s (limit {limit} s)"


# --------------------------------------------------------------------------
# 1 geometry

# the phase om * theta^3 of ExampleC oscillates with period ~0.008 near theta = 50,
# so its random arc lengths are taken on a shorter window
GEOMETRY_CASES = [(G.example_a, 16 * math.pi, 16 * math.pi), (G.example_b, 16 * math.pi, 16 * math.pi),
                  (G.example_c, 16 * math.pi, 6 * math.pi)]


def test_criterion_01_geometry():
    with criterion(1, "geometry: nesting, arc-distance sandwich, chart round trip", 5):
        rng = np.random.default_rng(101)
        for make, t_nest, t_arc in GEOMETRY_CASES:
            curves = make()
            spec = G.validate_domain(curves, t_nest, n_samples=10_000)
            th = np.linspace(curves.theta0, t_nest, 10_000)
            r1, r2 = spec.radii(th)
            assert np.all((curves.radius(2, th + 2 * np.pi) < r1) & (r1 < r2))

            spec = G.validate_domain(curves, t_arc, n_samples=10_000)
            lams = rng.uniform(0, 1, 20)
            ths = np.sort(rng.uniform(curves.theta0, t_arc, 50))
            ell = G.arc_length_table(spec, lams, ths)  # 1000 random points
            dth = ths[None, :] - curves.theta0
            assert np.all(ell >= spec.r_star * dth - 1e-8)
            assert np.all(ell <= spec.L_star + (spec.r_bar + spec.mu0) * dth + 1e-8)

            lam = rng.uniform(0, 1, 10_000)
            tt = rng.uniform(curves.theta0, t_nest, 10_000)
            spec = G.validate_domain(curves, t_nest, n_samples=10_000)
            x1, x2 = G.strip_to_cartesian(spec, lam, tt)
            lam2, tt2 = G.cartesian_to_strip(spec, x1, x2)
            assert np.all(np.abs(tt2 - tt) <= 1e-12 * np.maximum(1.0, np.abs(tt)))
            assert np.all(np.abs(lam2 - lam) <= 1e-12 * np.maximum(1.0, np.abs(lam)) + 1e-11)


# --------------------------------------------------------------------------
# 2 constants

def test_criterion_02_constants():
    with criterion(2, "constants: eta in (0,1), window and separation conditions, s optimizer", 5):
        rng = np.random.default_rng(102)
        for _ in range(10_000):
            d = rng.uniform(0.01, 10)
            D_S = d * rng.uniform(1.01, 4)
            eta = C.general_eta(d, D_S, D_S * rng.uniform(1.01, 4), rng.uniform(0.1, 10))
            assert 0 < eta < 1
        curves = G.example_a()
        for _ in range(10):
            r_star, d0 = rng.uniform(0.5, 3), rng.uniform(0.05, 2)
            spec = G.unchecked_domain(curves, 50.0, r_star=r_star, r_bar=r_star + d0)
            c0 = rng.uniform(0.2, 2)
            ell = C.EllipticityData(c0, c0 * rng.uniform(2, 10), M2=rng.uniform(0, 3))
            gc = C.annulus_constants(spec, ell)
            assert math.cos(gc.theta_star) < r_star / (r_star + gc.d0)
            first = (r_star + gc.d0) * (1 / math.cos(gc.theta_star) - 1)
            second = gc.d0**2 / (2 * ((r_star + gc.d0) * (1 - math.cos(gc.theta_star)) - gc.d0))
            assert gc.d_star >= max(first, second) * (1 - 1e-12)
            e0 = (ell.M1 + ell.M2 * (r_star + gc.d0 + gc.d_star)) / ell.c0
            assert gc.s >= e0 - 2 and gc.s > 0
            assert 0 < gc.eta_star < 1
            a = gc.d_star / (gc.d_star + gc.d0)
            b = gc.d_star / gc.d_hat
            grid = np.linspace(gc.s_min, gc.s_min + 50, 100)
            assert a**gc.s - b**gc.s >= np.max(a**grid - b**grid) - 1e-15


# --------------------------------------------------------------------------
# 3 sequence classifier

VALUES4 = (0, 1, 2, 4, 8, 16)  # the value grid {0, .25, .5, 1, 2, 4} times 4
LAMBDAS = ((3, 10), (1, 2), (9, 10))


def brute_force(a, p, q, n_lam):
    """Exact integer reading of the discrete dichotomy with lambda = p/q."""
    n = len(a) - 1
    for i in range(1, n):
        if a[i] * q > p * max(a[i - 1], a[i + 1]):
            return "Violation", i
    if all(a[i] * q <= p * a[i - 1] for i in range(1, n_lam + 1)):
        return "Decay", None
    for i_star in range(1, n + 1):
        if a[i_star] > 0 and all(a[i - 1] * q <= p * a[i] for i in range(i_star + 1, n + 1)):
            return "Growth", i_star
    return "Violation", n


def _compare(a4, p, q, n_lam):
    lam = p / q
    got = C.classify_sequence([v / 4 for v in a4], [lam] * n_lam)
    tag, idx = brute_force(a4, p, q, n_lam)
    assert got.tag == tag, (a4, lam, n_lam)
    assert (got.index if tag == "Violation" else got.i_star if tag == "Growth" else None) == idx
    a = [v / 4 for v in a4]
    if tag == "Decay":
        for i, prod in enumerate(got.products, start=1):
            assert a[i] <= prod * a[0] * (1 + 1e-12)
    if tag == "Growth":
        for k, low in enumerate(got.lower_products):
            assert a[got.i_star + 1 + k] >= low * (1 - 1e-12)


def test_criterion_03_classifier():
    with criterion(3, "sequence classifier equals brute-force oracle", 30):
        cases = 0
        for n in range(3, 7):
            for a4 in itertools.product(VALUES4, repeat=n):
                for p, q in LAMBDAS:
                    for n_lam in (n - 2, n - 1):
                        _compare(a4, p, q, n_lam)
                        cases += 1
        rng = np.random.default_rng(103)
        for _ in range(60_000):
            n = int(rng.integers(7, 11))
            a4 = tuple(int(v) for v in rng.choice(VALUES4, size=n))
            p, q = LAMBDAS[int(rng.integers(3))]
            _compare(a4, p, q, n - 1 - int(rng.integers(2)))
            cases += 1
        assert cases <= 1_000_000


# --------------------------------------------------------------------------
# 4 barriers

BOUNDED = [O.laplacian(), O.rotated(1.0, 3.0), O.laplacian().with_drift(O.const_drift(0.5, 0.2)),
           O.rotated(1.0, 4.0).with_drift(O.const_drift(0.3, -0.1))]


def test_criterion_04_barriers():
    with criterion(4, "barrier residuals nonpositive", 5):
        spec = G.validate_domain(G.example_a(), 16 * math.pi)
        rng = np.random.default_rng(104)
        for fld in BOUNDED:
            ell = O.validate_ellipticity(fld, spec)
            gc = C.annulus_constants(spec, ell)
            theta_bar = rng.uniform(0, spec.theta_max - 2 * gc.theta_star, 10_000)
            lam = rng.uniform(0, 1, 10_000)
            th = theta_bar + rng.uniform(0, 2 * gc.theta_star, 10_000)
            # each point is checked against the barrier of its own window
            rad = spec.r_star + gc.d0 + gc.d_star
            phi = theta_bar + gc.theta_star
            bs_x = (rad * np.cos(phi), rad * np.sin(phi))
            e0 = (ell.M1 + ell.M2 * rad) / ell.c0
            bs = O.BarrierSpec(bs_x, gc.s, e0)
            x1, x2 = G.strip_to_cartesian(spec, lam, th)
            assert np.all(O.barrier_residual(fld, bs, x1, x2, th) <= 1e-9)
            # away from the degenerate scale of d*, a moderate barrier is checked too
            xs = (0.0, 0.0)
            small = O.BarrierSpec(xs, max(O.barrier_e0(ell, xs, x1, x2) - 2, 0.5),
                                  O.barrier_e0(ell, xs, x1, x2))
            assert np.all(O.barrier_residual(fld, small, x1, x2, th) <= 1e-9)

            kc = C.inhomogeneous_constants(spec, ell)
            _, th2, y1, y2 = O.sample_domain(spec, 10_000, rng)
            assert np.all(O.exp_barrier_residual(fld, kc.K0, kc.eps, y1, y2, th2) <= 0)


# --------------------------------------------------------------------------
# 5 solver

def test_criterion_05_solver():
    with criterion(5, "discrete maximum principle and convergence orders", 120):
        spec = G.validate_domain(G.example_a(), 16 * math.pi)
        bc = S.BoundaryData(inner=lambda l, t, x1, x2: np.sin(3 * l) + 0.5,
                            gamma1=lambda l, t, x1, x2: np.cos(t), gamma2=-0.3, far=0.2)
        grid = S.StripGrid(21, 1001, 0.0, 20.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", MixedDerivativeDominance)
            for fld in BOUNDED:
                sol = S.solve_problem(fld, spec, grid, bc)
                b = sol.boundary_values[grid.boundary_mask()]
                assert sol.values.max() <= b.max() + 1e-10
                assert sol.values.min() >= b.min() - 1e-10

        sizes = [(51, 251), (101, 501), (201, 1001), (401, 2001)]
        errs = [S.manufactured_error(O.laplacian(), spec, S.StripGrid(nl, nt, 0.0, 2.0))
                for nl, nt in sizes]
        orders = S.observed_orders(errs)
        print("\n  no drift errors", errs, "orders", orders)
        assert np.all(orders >= 1.8)
        drift = O.laplacian().with_drift(O.const_drift(3.0, 2.0))
        errs = [S.manufactured_error(drift, spec, S.StripGrid(nl, nt, 0.0, 2.0), scheme="upwind")
                for nl, nt in sizes]
        orders = S.observed_orders(errs)
        print("  drift errors", errs, "orders", orders)
        assert np.all(orders >= 0.9)


# --------------------------------------------------------------------------
# 6-10 harness experiments

def test_criterion_06_dichotomy():
    with criterion(6, "decay dichotomy on the Laplacian preset", 60):
        rep = H.run_dichotomy(H.ExperimentConfig())
        print("\n ", rep.summary())
        assert rep.passed and not rep.violations
        assert rep.branch == "Decay"
        assert rep.nu_emp >= rep.numbers["nu"]
        assert np.all(rep.profile <= rep.envelope + rep.tolerance)


def test_criterion_07_arc_distance():
    with criterion(7, "arc-distance envelope and tightened k_eps", 60):
        rep = H.run_arc_dichotomy(H.ExperimentConfig(), tighten=0.1)
        print("\n ", rep.summary())
        assert rep.passed
        assert rep.numbers["k_eps"] < rep.numbers["k_star"]


def test_criterion_08_unbounded():
    with criterion(8, "unbounded drift envelope", 120):
        rep = H.run_unbounded(H.unbounded_config(alpha=0.5, kappa=0.2))
        print("\n ", rep.summary())
        assert rep.numbers["mt1"] == "PASS"
        assert rep.passed and not rep.violations


def test_criterion_09_inhomogeneous():
    with criterion(9, "inhomogeneous scenarios and oscillation envelope", 120):
        rep = H.run_inhomogeneous(H.ExperimentConfig())
        print("\n ", rep.summary())
        assert rep.passed
        for name in ("constant", "sine"):
            osc, env = rep.columns[f"{name}_osc"], rep.columns[f"{name}_osc_env"]
            assert np.all(osc <= env + rep.tolerance)


def test_criterion_10_dependence():
    with criterion(10, "continuous dependence", 60):
        rep = H.run_dependence(H.ExperimentConfig())
        print("\n ", rep.summary())
        assert rep.passed


# --------------------------------------------------------------------------
# 11 cross-oracle

def test_criterion_11_cross_oracle():
    with criterion(11, "Monte Carlo against finite differences", 120):
        rep = H.run_cross_oracle(n=100_000)
        print("\n ", rep.summary())
        assert len(rep.probes) == 10
        assert np.all(np.abs(rep.mc - rep.fd) <= 3 * rep.stderr + 2e-2)
