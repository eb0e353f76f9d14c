"""Named numerical checks of every exact identity the library relies on.

Each check returns its worst error over a fuzzed or gridded set of inputs
and the tolerance it is held to. The ``verify-identities`` command prints
these as a table.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis as an
from . import chebyshev as cheb
from . import estimators as est
from . import kernels as kn
from . import targets as tg
from .rng import DrawKind, RandomStream

__all__ = ["CheckResult", "run_identity_suite", "CHECK_NAMES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    cases: int
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error) and self.max_error <= self.tolerance)


def _rel(a, b, scale=None):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if scale is None:
        scale = np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.abs(a - b) / np.maximum(scale, 1e-300))) if a.size else 0.0


def _hermite(fn, n=64):
    t, w = np.polynomial.hermite.hermgauss(n)
    return np.sum(w * fn(math.sqrt(2.0) * t)) / math.sqrt(math.pi)


# ---------------------------------------------------------------- chebyshev

def check_p_identity(k_max, **_):
    z = np.linspace(0.0, 6.0, 1000)
    worst, n = 0.0, 0
    for K in range(1, k_max + 1):
        ref = cheb.chebyshev_T(K, 1.0 - z / 2.0)
        got = cheb.eval_p(K, z)
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
        n += z.size
    return worst, 1e-8, n


def check_q_identity(k_max, **_):
    z = np.linspace(0.0, 6.0, 1000)
    worst, n = 0.0, 0
    for K in range(1, k_max + 1):
        ref = cheb.chebyshev_U(K - 1, 1.0 - z / 2.0)
        got = cheb.eval_q(K, z)
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref)))))
        n += z.size
    return worst, 1e-8, n


def _recurrence_T(k, w):
    a, b = np.ones_like(w), w
    if k == 0:
        return a
    for _ in range(1, k):
        a, b = b, 2 * w * b - a
    return b


def _recurrence_U(k, w):
    a, b = np.ones_like(w), 2 * w
    if k == 0:
        return a
    for _ in range(1, k):
        a, b = b, 2 * w * b - a
    return b


def check_T_branches(k_max, **_):
    w = np.concatenate([np.linspace(-2.0, 2.0, 401), [-1.0, 1.0]])
    worst = 0.0
    for k in range(0, min(k_max, 24) + 1):
        ref = _recurrence_T(k, w)
        worst = max(worst, _rel(cheb.chebyshev_T(k, w), ref, np.maximum(1.0, np.abs(ref))))
    return worst, 1e-10, w.size * (min(k_max, 24) + 1)


def check_U_branches(k_max, **_):
    w = np.concatenate([np.linspace(-2.0, 2.0, 401), [-1.0, 1.0]])
    worst = 0.0
    for k in range(0, min(k_max, 24) + 1):
        ref = _recurrence_U(k, w)
        worst = max(worst, _rel(cheb.chebyshev_U(k, w), ref, np.maximum(1.0, np.abs(ref))))
    return worst, 1e-10, w.size * (min(k_max, 24) + 1)


def check_coeff_base_cases(k_max, **_):
    worst = 0.0
    for K in range(1, k_max + 1):
        c = cheb.leapfrog_coeffs(K)
        worst = max(worst, abs(c.D[0] - 1.0), abs(c.D[1] + K * K / 2.0) / (K * K / 2.0),
                    abs(c.E[0] - K) / K)
    return worst, 1e-12, k_max


def check_coeff_signs(k_max, **_):
    bad = 0
    for K in range(1, k_max + 1):
        c = cheb.leapfrog_coeffs(K)
        sD = np.sign(c.D) * (-1.0) ** np.arange(c.D.size)
        sE = np.sign(c.E) * (-1.0) ** np.arange(c.E.size)
        bad += int(np.sum(sD != 1) + np.sum(sE != 1))
    return float(bad), 0.0, k_max


def check_coeff_endpoint(k_max, **_):
    worst = 0.0
    for K in range(1, k_max + 1):
        c = cheb.leapfrog_coeffs(K)
        worst = max(worst, abs(float(cheb.eval_p(K, 4.0)) - (-1.0) ** K))
        if K <= 20:
            worst = max(worst, abs(float(c.p(4.0)) - (-1.0) ** K))
    return worst, 1e-8, k_max


def check_coeff_sum_matches_recurrence(k_max, **_):
    # Small z only: the explicit sum cancels catastrophically when 2 h lam K^2 > 1.
    worst = 0.0
    for K in range(1, min(k_max, 20) + 1):
        c = cheb.leapfrog_coeffs(K)
        z = np.linspace(0.0, 1.0 / (K * K), 50)
        worst = max(worst, _rel(c.p(z), cheb.eval_p(K, z)), _rel(c.q(z), cheb.eval_q(K, z)))
    return worst, 1e-12, 50 * min(k_max, 20)


def check_coeff_fit_from_leapfrog(k_max, **_):
    """Least-squares fit of degree-K polynomials to simulated scalar leapfrog endpoints."""
    worst = 0.0
    for K in range(1, min(k_max, 12) + 1):
        c = cheb.leapfrog_coeffs(K)
        # Fit in t = z/4 so all monomial coefficients are of similar size.
        m = 4 * (K + 1)
        t = 0.5 * (1 - np.cos(np.pi * (np.arange(m) + 0.5) / m))
        tgt = tg.make_diagonal_quadratic(4.0 * t)
        xs = kn.leapfrog_trajectory(tgt, np.ones(m), np.zeros(m), 1.0, K).xs[-1]
        vs = kn.leapfrog_trajectory(tgt, np.zeros(m), np.ones(m), 1.0, K).xs[-1]
        V = np.vander(t, K + 1, increasing=True)
        Dt = np.linalg.lstsq(V, xs, rcond=None)[0]
        Et = np.linalg.lstsq(V, vs, rcond=None)[0][:K]
        D = Dt / 4.0 ** np.arange(K + 1)
        E = Et / 4.0 ** np.arange(K)
        # Normwise relative error: the fit cannot resolve each coefficient separately.
        worst = max(worst, float(np.max(np.abs(D - c.D)) / np.max(np.abs(c.D))),
                    float(np.max(np.abs(E - c.E)) / np.max(np.abs(c.E))))
    return worst, 1e-8, min(k_max, 12)


def check_resonance_completeness(k_max, **_):
    worst, n = 0.0, 0
    for K in range(2, min(k_max, 16) + 1):
        for j in range(1, K):
            z = 2.0 * (1.0 - math.cos(j * math.pi / K))
            worst = max(worst, abs(abs(float(cheb.eval_p(K, z))) - 1.0), abs(float(cheb.eval_q(K, z))))
            n += 1
    return worst, 1e-9, n


def check_resonant_lambda(k_max, **_):
    cases = [((1.0, 2, 1), 2.0), ((0.1, 4, 1), 200.0 * (1 - math.cos(math.pi / 4)))]
    worst = max(abs(cheb.resonant_lambda(*a) - v) / v for a, v in cases)
    return worst, 1e-14, len(cases)


def check_alpha_beta_bracket(k_max, rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        K = int(rng.integers(1, k_max + 1))
        lam = float(np.exp(rng.uniform(0, math.log(1e4))))
        h = float(rng.uniform(0.01, 1.0)) / (2.0 * lam * K * K)
        c = cheb.hmc_alpha_beta(h, lam, K)
        a_lead, b_lead = h * lam * K * K, math.sqrt(2 * h) * K
        worst = max(worst, max(0.0, 0.8 - c.alpha / a_lead, c.alpha / a_lead - 1.0,
                               0.8 - c.beta / b_lead, c.beta / b_lead - 1.0))
    return worst, 1e-12, n_fuzz


def check_alpha_beta_K1(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        h, lam = float(rng.uniform(1e-4, 1.0)), float(rng.uniform(1.0, 100.0))
        c = cheb.hmc_alpha_beta(h, lam, 1)
        worst = max(worst, abs(c.alpha - h * lam) / (h * lam), abs(c.beta - math.sqrt(2 * h)) / math.sqrt(2 * h))
    return worst, 1e-12, n_fuzz


# ----------------------------------------------------------- leapfrog

def _fuzz_cosine(rng, d=None):
    d = d or int(rng.integers(2, 8))
    kappa = float(rng.uniform(3.0, 200.0))
    h = float(np.exp(rng.uniform(math.log(1e-5), math.log(1e-1))))
    return tg.make_cosine_hard(d, kappa, h)


def _fuzz_quadratic(rng, d=None):
    d = d or int(rng.integers(1, 8))
    return tg.make_diagonal_quadratic(np.exp(rng.uniform(0.0, math.log(100.0), size=d)))


def _fuzz_target(rng, i):
    return _fuzz_quadratic(rng) if i % 2 == 0 else _fuzz_cosine(rng)


def _stable_eta(rng, target, K):
    # Keep eta^2 L within the leapfrog stability region so iterates stay O(1).
    return float(rng.uniform(0.05, 1.9)) / math.sqrt(target.L_hi)


def check_leapfrog_iterate_closed_form(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        K = int(rng.integers(1, 17))
        eta = _stable_eta(rng, t, K)
        x0, v0 = rng.standard_normal(t.d), rng.standard_normal(t.d)
        p = kn.leapfrog_trajectory(t, x0, v0, eta, K)
        for k in range(1, K + 1):
            acc = x0 + eta * k * v0 - 0.5 * eta * eta * k * p.grads[0]
            scale = np.abs(x0) + eta * k * np.abs(v0) + 0.5 * eta * eta * k * np.abs(p.grads[0])
            for j in range(1, k):
                acc = acc - eta * eta * (k - j) * p.grads[j]
                scale = scale + eta * eta * (k - j) * np.abs(p.grads[j])
            worst = max(worst, _rel(p.xs[k], acc, scale))
    return worst, 1e-9, n_fuzz


def check_leapfrog_polynomial_map(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        lam = float(np.exp(rng.uniform(math.log(1e-2), math.log(1e2))))
        z = float(rng.uniform(0.0, 6.0))
        eta = math.sqrt(z / lam)
        K = int(rng.integers(1, 33))
        x0, v0 = rng.standard_normal(2)
        t = tg.make_diagonal_quadratic([lam])
        sim = kn.leapfrog_trajectory(t, [x0], [v0], eta, K).xs[-1, 0]
        p, q = float(cheb.eval_p(K, z)), float(cheb.eval_q(K, z))
        ref = cheb.closed_form_hmc_map(lam, eta, K, x0, v0)
        worst = max(worst, _rel(sim, ref, abs(p * x0) + abs(eta * q * v0)))
    return worst, 1e-9, n_fuzz


def check_leapfrog_reversibility(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        K = int(rng.integers(1, 17))
        eta = _stable_eta(rng, t, K)
        x0, v0 = rng.standard_normal(t.d), rng.standard_normal(t.d)
        fwd = kn.leapfrog_trajectory(t, x0, v0, eta, K)
        back = kn.leapfrog_trajectory(t, fwd.xs[-1], -fwd.vs[-1], eta, K)
        worst = max(worst, _rel(back.xs[-1], x0, np.maximum(1.0, np.abs(x0))))
    return worst, 1e-9, n_fuzz


def check_hmc_mala_coupling(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        h = float(rng.uniform(0.01, 0.5)) / t.L_hi
        x, g = rng.standard_normal(t.d), rng.standard_normal(t.d)
        m = kn.mala_step(t, x, h, noise=g, u=0.5)
        hm = kn.hmc_step(t, x, math.sqrt(2 * h), 1, noise=g, u=0.5)
        worst = max(worst, _rel(m.proposal, hm.proposal, np.maximum(1.0, np.abs(m.proposal))),
                    abs(m.log_accept - hm.log_accept) / max(1.0, abs(m.log_accept)))
    return worst, 1e-9, n_fuzz


# --------------------------------------------------------- acceptance identities

def _terms_scale(t, x, y, h):
    gx, gy = t.grad(x), t.grad(y)
    return (np.sum(np.abs(t.coord_potential(x))) + np.sum(np.abs(t.coord_potential(y)))
            + 0.5 * np.sum(np.abs((x - y) * (gx + gy)))
            + 0.25 * h * (np.sum(gx * gx) + np.sum(gy * gy)))


def check_mala_general_identity(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        h = float(np.exp(rng.uniform(math.log(1e-4), 0.0))) / t.L_hi
        x = rng.standard_normal(t.d) / math.sqrt(t.mu_lo)
        y = x - h * t.grad(x) + math.sqrt(2 * h) * rng.standard_normal(t.d)
        direct = kn.mala_step(t, x, h, noise=(y - x + h * t.grad(x)) / math.sqrt(2 * h), u=0.5)
        ref = an.mala_log_accept_general(t, x, direct.proposal, h)
        worst = max(worst, abs(direct.log_accept - ref) / _terms_scale(t, x, direct.proposal, h))
    return worst, 1e-9, n_fuzz


def check_mala_quadratic_identity(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        t = _fuzz_quadratic(rng)
        lam = t.quadratic_diag
        h = float(np.exp(rng.uniform(math.log(1e-4), 0.0))) / t.L_hi
        x, y = rng.standard_normal(t.d), rng.standard_normal(t.d)
        a = an.mala_log_accept_quadratic(lam, x, y, h)
        b = an.mala_log_accept_general(t, x, y, h)
        scale = 0.25 * h * np.sum(lam**2 * (x * x + y * y)) + _terms_scale(t, x, y, h)
        worst = max(worst, abs(a - b) / scale)
    return worst, 1e-9, n_fuzz


def check_mala_separability(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        h = 0.1 / t.L_hi
        x, y = rng.standard_normal(t.d), rng.standard_normal(t.d)
        total = an.mala_log_accept_general(t, x, y, h)
        parts = sum(an.mala_log_accept_general(tg.Target([s]), x[j:j + 1], y[j:j + 1], h)
                    for j, s in enumerate(t.specs))
        worst = max(worst, abs(total - parts) / _terms_scale(t, x, y, h))
    return worst, 1e-9, n_fuzz


def check_accept_decomposition(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        h = float(np.exp(rng.uniform(math.log(1e-4), 0.0))) / t.L_hi
        x, g = rng.standard_normal(t.d), rng.standard_normal(t.d)
        dec = an.accept_decomposition(t, x, g, h)
        scale = abs(dec.stochastic) + abs(dec.drift_coupling) + abs(dec.gradient_term) + abs(dec.total)
        y = x + math.sqrt(2 * h) * g - h * t.grad(x)
        scale = max(scale, _terms_scale(t, x, y, h))
        worst = max(worst, abs(dec.parts_sum - dec.total) / scale)
    return worst, 1e-9, n_fuzz


def _hmc_scale(t, p):
    xs, gr, vs = p.xs, p.grads, p.vs
    return float(np.sum(np.abs(t.coord_potential(xs))) + 0.5 * np.sum(vs[[0, -1]] ** 2)
                 + 0.5 * np.sum(np.abs((gr[:-1] + gr[1:]) * (xs[1:] - xs[:-1])))
                 + 0.125 * p.eta**2 * np.sum(gr[[0, -1]] ** 2))


def _check_telescoped(rng, n_fuzz, make):
    worst = 0.0
    for _ in range(n_fuzz):
        t = make(rng)
        K = int(rng.integers(1, 17))
        eta = _stable_eta(rng, t, K)
        x0, v0 = rng.standard_normal(t.d), rng.standard_normal(t.d)
        rec = kn.hmc_step(t, x0, eta, K, noise=v0, u=0.5, store_path=True)
        tel = an.hmc_telescoped_delta_H(t, rec.path, eta)
        worst = max(worst, abs(rec.log_accept - tel) / _hmc_scale(t, rec.path))
    return worst, 1e-9, n_fuzz


def check_telescoped_quadratic(rng, n_fuzz, **_):
    return _check_telescoped(rng, n_fuzz, _fuzz_quadratic)


def check_telescoped_cosine(rng, n_fuzz, **_):
    return _check_telescoped(rng, n_fuzz, _fuzz_cosine)


def check_quadratic_step_terms_vanish(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        t = _fuzz_quadratic(rng)
        K = int(rng.integers(1, 17))
        eta = _stable_eta(rng, t, K)
        p = kn.leapfrog_trajectory(t, rng.standard_normal(t.d), rng.standard_normal(t.d), eta, K)
        fs = t.potential(p.xs)
        steps = fs[:-1] - fs[1:] + 0.5 * np.sum((p.grads[:-1] + p.grads[1:]) * (p.xs[1:] - p.xs[:-1]), axis=-1)
        worst = max(worst, float(np.max(np.abs(steps))) / _hmc_scale(t, p))
    return worst, 1e-9, n_fuzz


def check_delta_H_quadratic(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(n_fuzz):
        t = _fuzz_quadratic(rng)
        K = int(rng.integers(1, 17))
        eta = _stable_eta(rng, t, K)
        x0, v0 = rng.standard_normal(t.d), rng.standard_normal(t.d)
        rec = kn.hmc_step(t, x0, eta, K, noise=v0, u=0.5, store_path=True)
        cf = an.hmc_delta_H_quadratic(t.quadratic_diag, x0, rec.proposal, eta)
        worst = max(worst, abs(rec.log_accept - cf) / _hmc_scale(t, rec.path))
    return worst, 1e-9, n_fuzz


def check_telescoped_K1_is_mala(rng, n_fuzz, **_):
    worst = 0.0
    for i in range(n_fuzz):
        t = _fuzz_target(rng, i)
        eta = _stable_eta(rng, t, 1)
        x0, v0 = rng.standard_normal(t.d), rng.standard_normal(t.d)
        p = kn.leapfrog_trajectory(t, x0, v0, eta, 1)
        tel = an.hmc_telescoped_delta_H(t, p, eta)
        gen = an.mala_log_accept_general(t, x0, p.xs[-1], 0.5 * eta * eta)
        worst = max(worst, abs(tel - gen) / _hmc_scale(t, p))
    return worst, 1e-9, n_fuzz


def check_expected_accept_mala_zero_start(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(min(n_fuzz, 100)):
        d = int(rng.integers(1, 50))
        h = float(rng.uniform(1e-4, 1.0))
        a, b = an.mala_alpha_beta(h, np.ones(d))
        val = an.expected_quadratic_log_accept(np.ones(d), np.zeros(d), a, b, h)
        worst = max(worst, abs(val + h * h * d / 2) / (h * h * d / 2))
    return worst, 1e-12, min(n_fuzz, 100)


# ------------------------------------------------------------ remainders

def check_remainder_cosine(rng, n_fuzz, **_):
    worst = 0.0
    n = min(n_fuzz, 200)
    for _ in range(n):
        kappa = float(rng.uniform(3.0, 200.0))
        h = float(np.exp(rng.uniform(math.log(1e-5), math.log(1e-1))))
        spec = tg.CoordinateSpec("cosine", kappa=kappa, h=h)
        x = float(rng.normal(0.0, 1.0 / math.sqrt(kappa)))
        xg = x + math.sqrt(2 * h) * float(rng.standard_normal())
        a = an.second_order_remainder(spec, x, xg, h)
        b = an.remainder_lhs(spec, x, xg)
        f, df, _ = tg.coordinate_functions(spec)
        scale = abs(f(x)) + abs(f(xg)) + 0.5 * abs((x - xg) * (df(x) + df(xg)))
        worst = max(worst, abs(a - b) / max(abs(b), 1e-3 * scale, 1e-300))
    return worst, 1e-8, n


def check_remainder_quadratic(rng, n_fuzz, **_):
    worst = 0.0
    for _ in range(min(n_fuzz, 100)):
        spec = tg.CoordinateSpec("quadratic", lam=float(rng.uniform(1.0, 100.0)))
        x, xg = rng.standard_normal(2)
        worst = max(worst, abs(an.second_order_remainder(spec, float(x), float(xg), 0.01)))
    return worst, 1e-10, min(n_fuzz, 100)


# -------------------------------------------------------------- moments

def check_cos_moment(**_):
    a = np.linspace(-2 * math.pi, 2 * math.pi, 101)
    ref = np.array([_hermite(lambda g: np.cos(ai + math.sqrt(2) * g)) for ai in a])
    return float(np.max(np.abs(an.gaussian_cos_moment(a) - ref))), 1e-12, a.size


def check_sin_g_moment(**_):
    a = np.linspace(-2 * math.pi, 2 * math.pi, 101)
    ref = np.array([_hermite(lambda g: g * np.sin(ai + math.sqrt(2) * g)) for ai in a])
    return float(np.max(np.abs(an.gaussian_sin_g_moment(a) - ref))), 1e-12, a.size


def check_cosine_drift_expectation(rng, n_fuzz, **_):
    worst = 0.0
    n = min(n_fuzz, 100)
    for _ in range(n):
        kappa = float(rng.uniform(3.0, 200.0))
        h = float(np.exp(rng.uniform(math.log(1e-5), 0.0)))
        spec = tg.CoordinateSpec("cosine", kappa=kappa, h=h)
        f, df, _ = tg.coordinate_functions(spec)
        x = float(rng.uniform(-3, 3)) * math.sqrt(h)
        s2h = math.sqrt(2 * h)

        def S(g):
            xg = x + s2h * g
            return -f(xg) + f(x) - 0.5 * (x - xg) * (df(x) + df(xg))

        ref = _hermite(S)
        worst = max(worst, abs(an.cosine_drift_expectation(kappa, h, x) - ref) / (kappa * h))
    return worst, 1e-10, n


def check_drift_coeff_floor(k_max, **_):
    vals = [an.hmc_cosine_drift_coeff(K) for K in range(1, max(k_max, 1) + 1)]
    return max(0.0, an.HMC_DRIFT_COEFF_FLOOR - min(vals)), 0.0, len(vals)


def check_drift_coeff_K1(**_):
    return abs(an.hmc_cosine_drift_coeff(1) - (1 - 2 / math.e)), 1e-12, 1


# ------------------------------------------------------------ targets / sets

def _fd_check(t, rng, n=200):
    worst = 0.0
    for _ in range(n):
        x = rng.standard_normal(t.d) / math.sqrt(t.mu_lo)
        eps = 1e-6 * np.maximum(1.0, np.abs(x))
        E = np.diag(eps)
        fd = (t.potential(x + E) - t.potential(x - E)) / (2 * eps)
        g = t.grad(x)
        worst = max(worst, float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g)))))
    return worst, 1e-6, n


def check_grad_hq(rng, **_):
    return _fd_check(tg.make_hard_quadratic(6, 50.0), rng)


def check_grad_hqc(rng, **_):
    return _fd_check(tg.make_hqc(6, 50.0), rng)


def check_grad_resonant(rng, **_):
    return _fd_check(tg.make_resonant_gaussian(4, 100.0, 1.0, 2)[0], rng)


def check_grad_cosine(rng, **_):
    return _fd_check(tg.make_cosine_hard(6, 30.0, 1e-3), rng)


def check_cosine_curvature(**_):
    spec = tg.CoordinateSpec("cosine", kappa=30.0, h=1e-3)
    _, _, d2f = tg.coordinate_functions(spec)
    c = np.linspace(-1, 1, 200001)
    v = d2f(c)
    err = max(0.0, 10.0 - v.min(), v.max() - 30.0)
    return float(err), 1e-12, c.size


def check_small_ball_d2(**_):
    t = tg.make_isotropic_gaussian(2)
    m = est.set_measure_mc(t, est.make_witness("small_ball", 2), 0, None)
    return abs(m.estimate - (1 - math.exp(-0.5))), 1e-14, 1


def check_omega_hard_period_shift(rng, n_fuzz, **_):
    kappa, h, d = 100.0, 1e-4, 6
    w = est.make_witness("omega_hard", d, kappa=kappa, h=h)
    cap = w.params["k_cap"]
    period = 2 * math.pi * math.sqrt(h)
    bad = 0
    for _ in range(n_fuzz):
        x = rng.uniform(-1, 1, size=d) * (cap - 1) * period
        x[0] = rng.uniform(-2, 2)
        i = int(rng.integers(1, d))
        y = x.copy()
        y[i] += period
        bad += int(w.contains(x) != w.contains(y))
    return float(bad), 0.0, n_fuzz


_SUITE: list[tuple[str, Callable]] = [
    ("chebyshev_p_identity", check_p_identity),
    ("chebyshev_q_identity", check_q_identity),
    ("chebyshev_T_branches", check_T_branches),
    ("chebyshev_U_branches", check_U_branches),
    ("leapfrog_coeff_base_cases", check_coeff_base_cases),
    ("leapfrog_coeff_alternating_signs", check_coeff_signs),
    ("leapfrog_coeff_endpoint", check_coeff_endpoint),
    ("leapfrog_coeff_sum_vs_recurrence", check_coeff_sum_matches_recurrence),
    ("leapfrog_coeff_fit_from_simulation", check_coeff_fit_from_leapfrog),
    ("resonance_completeness", check_resonance_completeness),
    ("resonant_lambda_values", check_resonant_lambda),
    ("hmc_alpha_beta_bracket", check_alpha_beta_bracket),
    ("hmc_alpha_beta_single_step", check_alpha_beta_K1),
    ("leapfrog_iterate_closed_form", check_leapfrog_iterate_closed_form),
    ("leapfrog_polynomial_map", check_leapfrog_polynomial_map),
    ("leapfrog_reversibility", check_leapfrog_reversibility),
    ("hmc_single_step_is_mala", check_hmc_mala_coupling),
    ("mala_accept_gradient_form", check_mala_general_identity),
    ("mala_accept_quadratic_form", check_mala_quadratic_identity),
    ("mala_accept_separability", check_mala_separability),
    ("mala_accept_decomposition", check_accept_decomposition),
    ("hmc_energy_telescoped_quadratic", check_telescoped_quadratic),
    ("hmc_energy_telescoped_cosine", check_telescoped_cosine),
    ("hmc_energy_step_terms_vanish_quadratic", check_quadratic_step_terms_vanish),
    ("hmc_energy_quadratic_closed_form", check_delta_H_quadratic),
    ("hmc_energy_single_step_is_mala", check_telescoped_K1_is_mala),
    ("expected_accept_mala_zero_start", check_expected_accept_mala_zero_start),
    ("second_order_remainder_cosine", check_remainder_cosine),
    ("second_order_remainder_quadratic", check_remainder_quadratic),
    ("gaussian_cos_moment", check_cos_moment),
    ("gaussian_sin_g_moment", check_sin_g_moment),
    ("cosine_drift_expectation", check_cosine_drift_expectation),
    ("hmc_drift_coeff_floor", check_drift_coeff_floor),
    ("hmc_drift_coeff_single_step", check_drift_coeff_K1),
    ("gradient_hard_quadratic", check_grad_hq),
    ("gradient_hqc", check_grad_hqc),
    ("gradient_resonant", check_grad_resonant),
    ("gradient_cosine", check_grad_cosine),
    ("cosine_curvature_range", check_cosine_curvature),
    ("small_ball_measure_d2", check_small_ball_d2),
    ("omega_hard_period_shift", check_omega_hard_period_shift),
]

CHECK_NAMES = tuple(name for name, _ in _SUITE)


def run_identity_suite(k_max: int = 64, n_fuzz: int = 1000, seed: int = 0,
                       only=None) -> list[CheckResult]:
    """Run every check (or the names in ``only``); each check gets its own seeded generator."""
    if not 1 <= k_max <= cheb.K_MAX:
        raise ValueError(f"k_max must be in [1, {cheb.K_MAX}]")
    root = RandomStream(seed)
    out = []
    for i, (name, fn) in enumerate(_SUITE):
        if only is not None and name not in only:
            continue
        rng = root.spawn(i).generator(DrawKind.AUX)
        t0 = time.perf_counter()
        try:
            err, tol, n = fn(k_max=k_max, rng=rng, n_fuzz=n_fuzz)
        except Exception:  # a crashing check is a failing check
            err, tol, n = float("inf"), 0.0, 0
        out.append(CheckResult(name, float(err), float(tol), int(n), time.perf_counter() - t0))
    return out
