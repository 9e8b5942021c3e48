import math

import numpy as np
import pytest

from winding import geometry as G
from winding import montecarlo as M
from winding import operator as O
from winding import solver as S
from winding.errors import StepTooLarge


def annulus(theta_max=math.pi):
    def const(v):
        return lambda t, o=0: np.full(np.shape(t), float(v)) if o == 0 else np.zeros(np.shape(t))

    curves = G.custom_curves(const(1.0), const(2.0), analytic=True)
    return G.unchecked_domain(curves, theta_max, r_star=1.0, r_bar=2.0)


@pytest.fixture(scope="module")
def spec_short():
    return G.validate_domain(G.example_a(), 16 * math.pi)


def test_constant_data_is_exact(spec_short):
    est = M.estimate(O.laplacian(), spec_short, S.BoundaryData.uniform(0.8), (1.7, 0.1),
                     M.WalkerConfig(n=1000, theta_max=3.0))
    assert est.mean == 0.8 and est.stderr == 0.0
    assert est.n_capped == 0


def test_radial_harmonic_oracle():
    spec = annulus()
    g = S.BoundaryData.uniform(lambda l, t, x1, x2: np.log(np.hypot(x1, x2)) / math.log(2))
    x0 = (1.4 * math.cos(1.5), 1.4 * math.sin(1.5))
    est = M.estimate(O.laplacian(), spec, g, x0, M.WalkerConfig(dt=1e-4, n=4000, seed=3))
    exact = math.log(1.4) / math.log(2)
    assert abs(est.mean - exact) <= 3 * est.stderr
    assert est.n_exit_gamma + est.n_exit_inner + est.n_exit_far == 4000


def test_agrees_with_solver(spec_short):
    fld = O.laplacian().with_drift(O.const_drift(0.5, 0.0))
    tmax = math.pi
    bc = S.BoundaryData(inner=1.0, gamma1=lambda l, t, x1, x2: x1, gamma2=0.0, far=0.5)
    sol = S.solve_problem(fld, spec_short, S.StripGrid(41, 321, 0.0, tmax), bc)
    lam, th = 0.4, 1.2
    x0 = tuple(float(v) for v in G.strip_to_cartesian(spec_short, lam, th))
    est = M.estimate(fld, spec_short, bc, x0, M.WalkerConfig(n=5000, seed=1, theta_max=tmax))
    assert abs(est.mean - float(sol.interpolate(lam, th))) <= 3 * (est.stderr + 2e-2)


def test_deterministic_given_seed(spec_short):
    bc = S.BoundaryData(inner=1.0)
    cfg = M.WalkerConfig(n=2000, seed=7, theta_max=3.0)
    x0 = (1.7, 0.2)
    out = M.batch_estimate(O.laplacian(), spec_short, bc, [x0, x0], cfg)
    assert out[0] == out[1]
    other = M.estimate(O.laplacian(), spec_short, bc, x0, M.WalkerConfig(n=2000, seed=8, theta_max=3.0))
    assert other.mean != out[0].mean
    assert M.batch_estimate(O.laplacian(), spec_short, bc, [], cfg) == []


def test_blocks_extend_consistently(spec_short):
    bc = S.BoundaryData(inner=1.0)
    small = M.estimate(O.laplacian(), spec_short, bc, (1.7, 0.2),
                       M.WalkerConfig(n=M.BLOCK, seed=2, theta_max=3.0))
    again = M.estimate(O.laplacian(), spec_short, bc, (1.7, 0.2),
                       M.WalkerConfig(n=M.BLOCK, seed=2, theta_max=3.0))
    assert small == again


def test_stderr_scales_like_inverse_sqrt(spec_short):
    bc = S.BoundaryData(inner=1.0)
    x0 = (1.7, 0.2)
    e1 = M.estimate(O.laplacian(), spec_short, bc, x0, M.WalkerConfig(n=2000, seed=4, theta_max=3.0))
    e2 = M.estimate(O.laplacian(), spec_short, bc, x0, M.WalkerConfig(n=8000, seed=5, theta_max=3.0))
    assert e1.stderr / e2.stderr == pytest.approx(2.0, rel=0.2)


def test_large_step_rejected(spec_short):
    fld = O.laplacian().with_drift(O.const_drift(40.0, 0.0))
    with pytest.raises(StepTooLarge):
        M.estimate(fld, spec_short, S.BoundaryData(), (1.7, 0.2),
                   M.WalkerConfig(dt=0.01, n=1000, theta_max=3.0))


def test_config_validation(spec_short):
    with pytest.raises(ValueError):
        M.WalkerConfig(n=10)
    with pytest.raises(ValueError):
        M.WalkerConfig(dt=-1.0)
    with pytest.raises(ValueError):
        M.estimate(O.laplacian(), spec_short, S.BoundaryData(), (0.0, 0.0), M.WalkerConfig(n=1000))


def test_square_root_of_diffusion():
    a11, a12, a22 = np.array([2.0, 1.0]), np.array([0.5, -0.3]), np.array([1.0, 3.0])
    q11, q12, q22 = M._sqrt_2x2(a11, a12, a22)
    np.testing.assert_allclose(q11 * q11 + q12 * q12, a11)
    np.testing.assert_allclose(q11 * q12 + q12 * q22, a12)
    np.testing.assert_allclose(q12 * q12 + q22 * q22, a22)
