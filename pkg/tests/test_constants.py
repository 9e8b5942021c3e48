import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from winding import constants as C
from winding import geometry as G
from winding.errors import LengthMismatch, OrderingViolation


def flat_spec(r_star=1.0, d0=1.0, mu0=0.0, L_star=0.0):
    curves = G.custom_curves(lambda t: r_star + 0.3 * d0 + 0 * t, lambda t: r_star + d0 + 0 * t)
    spec = G.unchecked_domain(curves, 50.0, r_star=r_star, r_bar=r_star + d0, mu0=mu0)
    return G.replace(spec, L_star=L_star)


# growth factor

def test_general_eta_examples():
    assert C.general_eta(1, 2, 4, 2) == pytest.approx(13 / 16, abs=1e-15)
    assert C.general_eta(1, 1, 1e12, 1) <= 1e-11
    with pytest.raises(OrderingViolation):
        C.general_eta(1, 4, 2, 1)


@given(st.floats(0.01, 10), st.floats(1.001, 5), st.floats(1.001, 5), st.floats(0.05, 40))
def test_general_eta_in_unit_interval(d_star, f1, f2, s):
    D_S = d_star * f1
    eta = C.general_eta(d_star, D_S, D_S * f2, s)
    assert 0 < eta < 1 or math.isclose(eta, 1.0)


def test_general_eta_random_admissible():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        d = rng.uniform(0.01, 10)
        D_S = d * rng.uniform(1.01, 4)
        eta = C.general_eta(d, D_S, D_S * rng.uniform(1.01, 4), rng.uniform(0.1, 10))
        assert 0 < eta < 1


def test_decond_bound_high_precision():
    mpmath.mp.dps = 40
    c = mpmath.cos(mpmath.mpf("0.6"))
    r, d0 = mpmath.mpf(1), mpmath.mpf("0.2")
    oracle = d0**2 / (2 * ((r + d0) * (1 - c) - d0))
    assert C.coscond_holds(1.0, 0.2, 0.6)
    first, second = C.decond_bounds(1.0, 0.2, 0.6)
    assert second == pytest.approx(float(oracle), rel=1e-13)
    assert second == pytest.approx(2.083927663340995, rel=1e-12)
    assert first < second


def test_laplacian_lower_bound_on_s():
    assert C.s_lower_bound(1.0, 2.0, 0.0, 1.0, 0.2, 5.0) == 0.0
    ell = C.EllipticityData(1.0, 2.0, M2=0.0)
    gc = C.annulus_constants(flat_spec(d0=0.5), ell)
    assert gc.s_min == 0.0 and gc.s > 0


def _check_bundle(gc, spec, ell):
    assert C.coscond_holds(spec.r_star, gc.d0, gc.theta_star)
    assert gc.d_star >= max(C.decond_bounds(spec.r_star, gc.d0, gc.theta_star)) * (1 - 1e-12)
    e0 = (ell.M1 + ell.M2 * (spec.r_star + gc.d0 + gc.d_star)) / ell.c0
    assert gc.s >= e0 - 2 - 1e-12 and gc.s > 0
    assert 0 < gc.eta_star < 1
    assert gc.C_star == pytest.approx(1 / gc.eta_star)
    assert gc.nu == pytest.approx(math.log(1 / gc.eta_star) / gc.theta_star)


def test_annulus_constants_satisfy_conditions_random():
    rng = np.random.default_rng(3)
    for _ in range(12):
        spec = flat_spec(r_star=rng.uniform(0.5, 3), d0=rng.uniform(0.05, 2))
        c0 = rng.uniform(0.2, 2)
        ell = C.EllipticityData(c0, c0 * rng.uniform(2, 10), M2=rng.uniform(0, 3))
        gc = C.annulus_constants(spec, ell)
        _check_bundle(gc, spec, ell)
        lo, hi = C.admissible_theta_interval(spec.r_star, gc.d0)
        gc_fixed = C.annulus_constants(spec, ell, theta_star=rng.uniform(lo, hi))
        _check_bundle(gc_fixed, spec, ell)
        # with drift nu creeps up towards theta* = pi/2 without a maximum
        assert gc.nu >= gc_fixed.nu * (1 - 1e-3)


def test_s_beats_grid_oracle():
    rng = np.random.default_rng(4)
    for _ in range(5):
        spec = flat_spec(r_star=rng.uniform(0.5, 3), d0=rng.uniform(0.05, 2))
        ell = C.EllipticityData(1.0, rng.uniform(2, 6), M2=rng.uniform(0, 1))
        gc = C.annulus_constants(spec, ell)
        a = gc.d_star / (gc.d_star + gc.d0)
        b = gc.d_star / gc.d_hat
        best = a**gc.s - b**gc.s
        for s in np.linspace(gc.s_min, gc.s_min + 50, 100)[1:]:
            assert best >= a**s - b**s - 1e-15
        for s in rng.uniform(gc.s_min, gc.s_min + 50, 100):
            assert best >= a**s - b**s - 1e-15


def test_laplacian_example_a_bundle(spec_a):
    gc = C.annulus_constants(spec_a, C.EllipticityData(1.0, 2.0, M2=0.0))
    assert gc.k_star == pytest.approx(3.0)
    assert gc.nu > 0.17 and gc.C_star > 1


# envelopes

def test_decay_envelope_examples():
    gc = C.GrowthConstants.from_eta(0.5, math.pi / 4)
    assert gc.C_star == pytest.approx(2.0)
    assert gc.nu == pytest.approx(4 / math.pi * math.log(2))
    env = C.decay_envelope(gc, 1.0, 0.0)
    assert float(env(math.pi)) == pytest.approx(1 / 8)
    assert float(env(0.0)) == 1.0
    assert np.all(C.decay_envelope(gc, 0.0, 0.0)(np.linspace(0, 10, 5)) == 0)


def test_arc_envelope_examples():
    spec = flat_spec(r_star=1.0, d0=1.0, mu0=0.5)
    gc = C.GrowthConstants.from_eta(0.5, 1.0)
    env = C.arc_envelope(spec, gc, 1.0)
    assert env.k_star == pytest.approx(2.5)
    assert env(0.0) >= 1.0
    assert env.C_star_prime >= gc.C_star
    assert C.arc_envelope(spec, gc, 0.0)(3.0) == 0.0


def test_tightened_arc_envelope_has_smaller_k(spec_a):
    gc = C.annulus_constants(spec_a, C.EllipticityData(1.0, 2.0, M2=0.0))
    env = C.arc_envelope(spec_a, gc, 1.0, tighten=0.1)
    assert env.k_eps < env.k_star
    assert env.nu_prime > gc.nu / (spec_a.r_bar + spec_a.mu0)


def test_oscillation_envelope_examples():
    gc = C.GrowthConstants.from_eta(0.5, math.log(2))
    assert gc.nu == pytest.approx(1.0)
    env = C.oscillation_envelope(gc, 1.0, 3.0, 0.0)
    assert float(env(math.log(4))) == pytest.approx(2.0)
    assert float(env(200.0)) == pytest.approx(1.0)
    assert float(C.oscillation_envelope(gc, 0.0, 0.0, 0.0)(1.0)) == 0.0


# unbounded drift

def test_mt1_presets():
    assert C.mt1_check(C.DriftGrowth("log", 0.5), 0.2) == "PASS"
    assert C.mt1_check(C.DriftGrowth("log", 1.0), 0.2) == "FAIL"
    assert C.mt1_check(C.DriftGrowth("power", 1.0, 1.0), 0.5) == "FAIL"
    assert C.mt1_check(C.DriftGrowth("const", 2.0), 0.5) == "PASS"
    assert C.mt1_check(C.DriftGrowth("custom", func=np.sqrt), 0.5) == "UNKNOWN"


def test_unbounded_envelope_closed_form():
    uc = C.UnboundedConstants(Theta0=3.0, nu_bar=1.0, kappa=0.5, m=C.DriftGrowth("const", 0.0))
    env = C.unbounded_envelope(uc, 2.0)
    assert float(env(5.0)) == pytest.approx(2 * math.exp(-2), rel=1e-10)
    assert float(env(1.0)) == 2.0
    assert float(C.unbounded_envelope(uc, 0.0)(9.0)) == 0.0


def test_constant_m_matches_decay_envelope(spec_a):
    M2 = 0.3
    ell = C.EllipticityData(1.0, 2.0, m=C.DriftGrowth("const", M2), kappa=0.5)
    uc = C.unbounded_constants(spec_a, ell, 1.2)
    assert uc.nu_bar > 0 and uc.mt1 == "PASS"
    rate = uc.nu_bar * uc.kappa**M2
    gc = C.GrowthConstants.from_eta(math.exp(-rate * 1.0), 1.0)
    th = np.linspace(spec_a.theta0, 40.0, 60)
    unb = C.unbounded_envelope(uc, 1.5)(th)
    dec = C.decay_envelope(gc, 1.5, uc.Theta0 - gc.theta_star)(th)
    np.testing.assert_allclose(unb, dec, rtol=1e-9)


def test_logangular_constants(spec_a):
    ell = C.EllipticityData(1.0, 2.0, m=C.DriftGrowth("log", 0.5), kappa=0.2, Theta_bar=1.0)
    uc = C.unbounded_constants(spec_a, ell, 1.2)
    assert uc.nu_bar > 0 and uc.Theta0 > spec_a.theta0
    assert 0 < uc.lambda0 < 1 and uc.kappa_bar >= uc.kappa
    assert uc.mt1 == "PASS"


# sequence classifier

def oracle(a, lam):
    """Brute-force reading of the discrete dichotomy with exact arithmetic."""
    a = [Fraction(x) for x in a]
    n = len(a) - 1
    L = {i + 1: Fraction(x) for i, x in enumerate(lam)}
    for i in range(1, n):
        if a[i] > L[i] * max(a[i - 1], a[i + 1]):
            return ("Violation", i)
    if all(a[i] <= L[i] * a[i - 1] for i in L):
        return ("Decay", None)
    # walk back from the end while the steps keep growing
    j = n
    while j >= 2 and a[j] * L[j - 1] >= a[j - 1]:
        j -= 1
    while a[j] == 0:
        j += 1
    return ("Growth", j)


def test_classifier_examples():
    assert C.classify_sequence([1, 0.5, 0.25, 0.125], [0.5, 0.5]).tag == "Decay"
    g = C.classify_sequence([1, 2, 4, 8], [0.5, 0.5])
    assert g.tag == "Growth" and g.i_star == 1
    v = C.classify_sequence([1, 1, 1], [0.5])
    assert v.tag == "Violation" and v.index == 1
    with pytest.raises(LengthMismatch):
        C.classify_sequence([1, 1, 1], [0.5, 0.5, 0.5])


def _agree(a, lam):
    got = C.classify_sequence(a, lam)
    tag, idx = oracle(a, [Fraction(str(x)) for x in lam])
    assert got.tag == tag, (a, lam)
    if tag == "Violation":
        assert got.index == idx
    elif tag == "Growth":
        assert got.i_star == idx
        prod = 1.0
        for k, i in enumerate(range(got.i_star + 1, len(a))):
            prod *= lam[i - 2]
            assert a[i] >= got.lower_products[k] * (1 - 1e-12)
    else:
        for i, p in enumerate(got.products, start=1):
            assert a[i] <= p * a[0] * (1 + 1e-12)


VALUES = (0, 0.25, 0.5, 1, 2, 4)


def test_classifier_matches_oracle_exhaustive_short():
    for n in range(3, 6):
        for a in itertools.product(VALUES, repeat=n):
            for lam in (0.3, 0.5, 0.9):
                _agree(a, [lam] * (n - 2))
                _agree(a, [lam] * (n - 1))


@given(st.lists(st.sampled_from(VALUES), min_size=3, max_size=10),
       st.sampled_from((0.3, 0.5, 0.9)), st.booleans())
def test_classifier_matches_oracle_property(a, lam, last):
    _agree(a, [lam] * (len(a) - 1 - (0 if last else 1)))


# inhomogeneous constants

def test_kek_examples():
    kc = C.kek_constants(1.0, 0.0, 2.0)
    assert kc.K0 == 1.0 and kc.eps == pytest.approx(math.exp(-2))
    assert kc.K1 == pytest.approx(math.exp(4)) and kc.K1 == pytest.approx(54.598, abs=1e-3)
    kc = C.kek_constants(1.0, 0.0, 0.0)
    assert (kc.K0, kc.eps, kc.K1) == (1.0, 1.0, 1.0)


@given(st.floats(0.1, 5), st.floats(0, 5), st.floats(0, 3))
def test_kek_identity(c0, M2, d1):
    kc = C.kek_constants(c0, M2, d1)
    assert kc.K1 * kc.eps * math.exp(-kc.K0 * d1) * kc.K0 == pytest.approx(1.0, rel=1e-12)
