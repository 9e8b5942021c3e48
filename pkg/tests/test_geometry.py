import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from winding import geometry as G
from winding.errors import NonNested, NonPositiveRadius


def riemann_length(lam, theta, z1=2.0, z2=1.0, n=2_000_000):
    h = theta / n
    t = (np.arange(n) + 0.5) * h
    r1, r2 = 1 + 1 / (t + z1), 1 + 1 / (t + z2)
    d1, d2 = -1 / (t + z1) ** 2, -1 / (t + z2) ** 2
    R = r1 + lam * (r2 - r1)
    dR = d1 + lam * (d2 - d1)
    return float(np.sum(np.sqrt(R * R + dR * dR)) * h)


def test_example_a_radii(spec_a):
    r1, r2 = spec_a.radii(0.0)
    assert r1 == pytest.approx(1.5)
    assert r2 == pytest.approx(2.0)
    assert spec_a.k_star == pytest.approx(3.0)


def test_equal_offsets_not_nested():
    with pytest.raises(NonNested):
        G.validate_domain(G.example_a(z1=1.0, z2=1.0), 20.0)


def test_example_b_large_oscillation_not_nested():
    with pytest.raises(NonNested):
        G.validate_domain(G.example_b(z1=2.0, z2=1.0, eps1=0.6, eps2=0.5), 20.0)


def test_negative_radius_rejected():
    with pytest.raises(NonPositiveRadius):
        G.validate_domain(G.example_a(r_star=-1.0), 20.0)


def test_custom_crossing_curves_report_angle():
    curves = G.custom_curves(lambda t: 1.5 + 0 * t, lambda t: 1.4 + 0.2 * np.sin(t))
    with pytest.raises(NonNested) as info:
        G.validate_domain(curves, 20.0)
    assert info.value.theta is not None


@pytest.mark.parametrize("make", [G.example_a, G.example_b, G.example_c])
def test_presets_nest_on_dense_samples(make):
    spec = G.validate_domain(make(), 30.0, n_samples=10_000)
    th = np.linspace(0, 30, 10_000)
    r1, r2 = spec.radii(th)
    assert np.all(spec.curves.radius(2, th + 2 * np.pi) < r1)
    assert np.all(r1 < r2)
    assert np.all(r1 > spec.r_star)


def test_arc_length_trivial_cases(spec_a):
    assert G.arc_length(spec_a, 0.3, 0.0) == 0.0
    circle = G.custom_curves(lambda t, o=0: np.full(np.shape(t), 2.0) if o == 0 else np.zeros(np.shape(t)),
                             lambda t, o=0: np.full(np.shape(t), 3.0) if o == 0 else np.zeros(np.shape(t)),
                             analytic=True)
    spec = G.unchecked_domain(circle, 10.0, r_star=2.0, r_bar=3.0)
    assert G.arc_length(spec, 0.0, 4.0) == pytest.approx(8.0, rel=1e-12)


def test_arc_length_matches_riemann_sum(spec_a):
    ref = riemann_length(0.0, 2 * math.pi)
    assert ref == pytest.approx(7.719182234309668, abs=1e-9)
    assert abs(G.arc_length(spec_a, 0.0, 2 * math.pi) - ref) < 1e-8


def test_arc_length_table_agrees_with_direct(spec_a):
    lams = np.array([0.0, 0.4, 1.0])
    ths = np.linspace(0, 12, 7)
    table = G.arc_length_table(spec_a, lams, ths)
    direct = G.arc_length(spec_a, lams[:, None], ths[None, :])
    np.testing.assert_allclose(table, direct, atol=1e-9)


def test_arc_distance_sandwich(spec_a):
    rng = np.random.default_rng(1)
    lam = rng.uniform(0, 1, 1000)
    th = rng.uniform(0, spec_a.theta_max, 1000)
    ell = G.arc_length(spec_a, lam, th)
    lo = spec_a.r_star * th
    hi = spec_a.L_star + (spec_a.r_bar + spec_a.mu0) * th
    assert np.all(ell >= lo - 1e-8)
    assert np.all(ell <= hi + 1e-8)


def test_arc_distance_on_first_section_is_zero(spec_a):
    for p in G.cross_section(spec_a, 0.0, 5):
        assert G.arc_distance(spec_a, p) == 0.0


def test_tail_slope_below_refined_bound(spec_a):
    eps = 0.1
    th = np.linspace(35, 50, 31)
    for lam in (0.0, 0.5, 1.0):
        ell = G.arc_length(spec_a, lam, th)
        slope = np.polyfit(th, ell, 1)[0]
        assert slope <= spec_a.r_star + eps
    Theta_eps, L_eps = G.tail_epsilon_data(spec_a, eps)
    th = np.linspace(Theta_eps, spec_a.theta_max, 50)
    ell = G.arc_length(spec_a, 1.0, th)
    assert np.all(ell <= L_eps + (spec_a.r_star + eps) * (th - Theta_eps) + 1e-8)


def test_cross_section_points(spec_a):
    two = G.cross_section(spec_a, 0.0, 2)
    assert two[0].r == pytest.approx(1.5) and two[1].r == pytest.approx(2.0)
    three = G.cross_section(spec_a, 0.0, 3)
    assert three[1].r == pytest.approx(1.75)
    lams = [p.lam for p in G.cross_section(spec_a, 3.0, 9)]
    assert all(0 <= a < b <= 1 for a, b in zip(lams, lams[1:]))


def test_membership(spec_a):
    th = 7.0
    r1, r2 = (float(v) for v in spec_a.radii(th))
    mid = 0.5 * (r1 + r2)
    m = G.membership(spec_a, (mid * math.cos(th), mid * math.sin(th)))
    assert m.status is G.Location.INSIDE
    assert m.theta == pytest.approx(th)
    assert G.membership(spec_a, (1.0, 0.0)).status is G.Location.OUTSIDE
    on = G.membership(spec_a, (r1 * math.cos(th), r1 * math.sin(th)))
    assert on.status is G.Location.ON_GAMMA


def test_chart_round_trip_random(spec_a):
    rng = np.random.default_rng(2)
    lam = rng.uniform(0, 1, 10_000)
    th = rng.uniform(0, spec_a.theta_max, 10_000)
    x1, x2 = G.strip_to_cartesian(spec_a, lam, th)
    lam2, th2 = G.cartesian_to_strip(spec_a, x1, x2)
    np.testing.assert_allclose(th2, th, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(lam2, lam, rtol=1e-12, atol=1e-11)


@given(st.floats(0.01, 0.99), st.floats(0.0, 45.0))
def test_round_trip_property(lam, theta):
    spec = G.validate_domain(G.example_b(), 50.0, n_samples=2000)
    x1, x2 = G.strip_to_cartesian(spec, lam, theta)
    l2, t2 = G.cartesian_to_strip(spec, x1, x2)
    assert abs(float(t2) - theta) <= 1e-12 * max(1.0, theta)
    assert abs(float(l2) - lam) <= 1e-11


@given(st.floats(0.0, 1.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_arc_length_monotone_in_theta(lam, t1, t2):
    spec = G.validate_domain(G.example_a(), 50.0, n_samples=2000)
    a, b = sorted((t1, t2))
    assert G.arc_length(spec, lam, a) <= G.arc_length(spec, lam, b) + 1e-12
