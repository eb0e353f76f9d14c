import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metrolb import chebyshev as cheb
from metrolb.targets import make_diagonal_quadratic
from metrolb.kernels import leapfrog_trajectory


def test_coeffs_K1():
    c = cheb.leapfrog_coeffs(1)
    assert list(c.D) == [1.0, -0.5]
    assert list(c.E) == [1.0]


def test_coeffs_K2():
    c = cheb.leapfrog_coeffs(2)
    assert list(c.D) == [1.0, -2.0, 0.5]
    assert list(c.E) == [2.0, -1.0]


def test_coeffs_K_too_large():
    with pytest.raises(ValueError):
        cheb.leapfrog_coeffs(65)


def test_eval_p_at_zero_is_one():
    for K in range(0, 65):
        assert cheb.eval_p(K, 0.0) == 1.0


def test_eval_K2_at_two():
    assert math.isclose(cheb.eval_p(2, 2.0), -1.0, abs_tol=1e-15)
    assert math.isclose(cheb.eval_q(2, 2.0), 0.0, abs_tol=1e-15)


def test_chebyshev_T_cos_branch():
    assert math.isclose(cheb.chebyshev_T(3, 0.5), -1.0, abs_tol=1e-14)


def test_chebyshev_U1_is_2w():
    for w in (-3.0, -1.0, -0.2, 0.0, 0.7, 1.0, 2.5):
        assert math.isclose(cheb.chebyshev_U(1, w), 2 * w, rel_tol=1e-13, abs_tol=1e-14)


def test_chebyshev_cosh_branch_frozen():
    # values from mpmath chebyt/chebyu at 40 digits
    assert math.isclose(cheb.chebyshev_T(4, 1.5), 23.5, rel_tol=1e-12)
    assert math.isclose(cheb.chebyshev_U(5, -1.2), -31.53024, rel_tol=1e-12)


def test_chebyshev_T_matches_recurrence_outside():
    w = 1.5
    t0, t1 = 1.0, w
    for _ in range(3):
        t0, t1 = t1, 2 * w * t1 - t0
    assert math.isclose(cheb.chebyshev_T(4, w), t1, rel_tol=1e-12)


def test_resonant_lambda_values():
    assert math.isclose(cheb.resonant_lambda(1.0, 2, 1), 2.0, rel_tol=1e-15)
    # 2(1 - cos(pi/4)) * 100, mpmath
    assert math.isclose(cheb.resonant_lambda(0.1, 4, 1), 58.57864376269049512, rel_tol=1e-13)
    assert math.isclose(abs(cheb.eval_p(4, 0.01 * cheb.resonant_lambda(0.1, 4, 1))), 1.0, rel_tol=1e-12)


@pytest.mark.parametrize("j", [0, 3, -1])
def test_resonant_lambda_j_out_of_range(j):
    with pytest.raises(ValueError):
        cheb.resonant_lambda(1.0, 3, j)


def test_closed_form_map_K1():
    assert math.isclose(cheb.closed_form_hmc_map(3.0, 0.2, 1, 0.0, 1.7), 0.2 * 1.7, rel_tol=1e-15)


def test_closed_form_map_at_resonance():
    eta, K = 0.3, 5
    for j in range(1, K):
        lam = cheb.resonant_lambda(eta, K, j)
        out = cheb.closed_form_hmc_map(lam, eta, K, 1.3, -4.0)
        assert math.isclose(abs(out), 1.3, rel_tol=1e-9)


def test_hmc_alpha_beta_small_case():
    h, lam, K = 1e-3, 50.0, 2
    z = 2 * h * lam
    sc = cheb.hmc_alpha_beta(h, lam, K)
    w = 1 - z / 2
    assert math.isclose(sc.alpha, 1 - (2 * w * w - 1), rel_tol=1e-13)
    assert math.isclose(sc.beta, math.sqrt(2 * h) * 2 * w, rel_tol=1e-13)


def test_hmc_alpha_beta_outside_bracket_regime():
    # 2 h lam K^2 = 1.6, so no bracket is asserted
    sc = cheb.hmc_alpha_beta(1e-3, 50.0, 4)
    assert math.isclose(sc.alpha, 1 - cheb.eval_p(4, 0.1), rel_tol=1e-14)


def test_hmc_alpha_beta_K1_is_mala():
    sc = cheb.hmc_alpha_beta(0.01, 7.0, 1)
    assert math.isclose(sc.alpha, 0.07, rel_tol=1e-13)
    assert math.isclose(sc.beta, math.sqrt(0.02), rel_tol=1e-15)


def test_hmc_alpha_beta_at_resonance():
    K, h = 4, 0.01
    for j in range(1, K):
        lam = (1 - math.cos(j * math.pi / K)) / h
        sc = cheb.hmc_alpha_beta(h, lam, K)
        assert min(abs(sc.alpha), abs(sc.alpha - 2)) < 1e-12
        assert abs(sc.beta) < 1e-12


def test_hmc_alpha_beta_leading_bracket():
    sc = cheb.hmc_alpha_beta(1e-4, 1.0, 3)
    assert 0.8 * 9e-4 <= sc.alpha <= 9e-4


def test_coeffs_vectorized_eval():
    z = np.linspace(0, 4, 11)
    c = cheb.leapfrog_coeffs(7)
    assert np.allclose(c.p(z), cheb.eval_p(7, z), rtol=1e-12, atol=1e-12)
    assert np.allclose(c.q(z), cheb.eval_q(7, z), rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(K=st.integers(1, 64), z=st.floats(0.0, 6.0))
def test_p_q_match_chebyshev(K, z):
    w = 1 - z / 2
    T = cheb.chebyshev_T(K, w)
    U = cheb.chebyshev_U(K - 1, w)
    assert abs(cheb.eval_p(K, z) - T) <= 1e-8 * max(1.0, abs(T))
    assert abs(cheb.eval_q(K, z) - U) <= 1e-8 * max(1.0, abs(U))


@settings(max_examples=100, deadline=None)
@given(K=st.integers(2, 16), data=st.data())
def test_resonance_property(K, data):
    j = data.draw(st.integers(1, K - 1))
    z = 2 * (1 - math.cos(j * math.pi / K))
    assert math.isclose(abs(cheb.eval_p(K, z)), 1.0, abs_tol=1e-9)
    assert abs(cheb.eval_q(K, z)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(lam=st.floats(0.01, 100.0), z=st.floats(0.0, 4.0), K=st.integers(1, 32),
       x0=st.floats(-5, 5), v0=st.floats(-5, 5))
def test_leapfrog_matches_polynomial(lam, z, K, x0, v0):
    eta = math.sqrt(z / lam)
    t = make_diagonal_quadratic([lam])
    sim = leapfrog_trajectory(t, [x0], [v0], eta, K).xs[-1, 0]
    ref = cheb.closed_form_hmc_map(lam, eta, K, x0, v0)
    scale = abs(cheb.eval_p(K, z) * x0) + abs(eta * cheb.eval_q(K, z) * v0)
    assert abs(sim - ref) <= 1e-9 * max(scale, 1e-300) + 1e-300
