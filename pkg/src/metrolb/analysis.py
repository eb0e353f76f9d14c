"""Closed-form acceptance identities, drift statistics and 1-D oracles.

Everything here is a deterministic function of its inputs. The kernels
compute log-acceptances directly; these functions compute the same
quantities through rearranged formulas so each can check the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chebyshev import hmc_alpha_beta
from .targets import CoordinateSpec, Target, coordinate_functions

__all__ = [
    "AcceptDecomposition",
    "CoordinateDrift",
    "QuadratureError",
    "mala_log_accept_general",
    "mala_log_accept_quadratic",
    "accept_decomposition",
    "coordinate_drifts",
    "expected_quadratic_log_accept",
    "hmc_expected_quadratic_log_accept",
    "mala_alpha_beta",
    "hmc_delta_H_quadratic",
    "hmc_telescoped_delta_H",
    "remainder_lhs",
    "second_order_remainder",
    "adaptive_simpson",
    "gaussian_cos_moment",
    "gaussian_sin_g_moment",
    "cosine_drift_expectation",
    "hmc_cosine_drift_coeff",
    "HMC_DRIFT_COEFF_FLOOR",
]

HMC_DRIFT_COEFF_FLOOR = 0.129
_E = math.e


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its refinement cap without converging."""


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def mala_log_accept_general(target: Target, x, y, h: float):
    """Log Metropolis ratio rearranged as a symmetric gradient form.

    -f(y) + f(x) - <x - y, grad f(x) + grad f(y)>/2 + (h/4)(|grad f(x)|^2 - |grad f(y)|^2)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gx, gy = target.grad(x), target.grad(y)
    return (target.potential(x) - target.potential(y) - 0.5 * _dot(x - y, gx + gy)
            + 0.25 * h * (_dot(gx, gx) - _dot(gy, gy)))


def mala_log_accept_quadratic(lam_diag, x, y, h: float):
    """(h/4) sum lam_i^2 (x_i^2 - y_i^2) for f = x^T diag(lam) x / 2."""
    lam2 = np.asarray(lam_diag, dtype=float) ** 2
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.25 * h * np.sum(lam2 * (x * x - y * y), axis=-1)


@dataclass(frozen=True)
class AcceptDecomposition:
    """MALA log-acceptance split through the intermediate point x_g = x + sqrt(2h) g.

    ``stochastic`` depends on the noise only through x_g and is the per-coordinate
    sum of S values; ``drift_coupling`` and ``gradient_term`` carry the effect
    of the deterministic drift -h grad f(x).
    """

    total: float
    stochastic: float
    drift_coupling: float
    gradient_term: float

    @property
    def parts_sum(self):
        return self.stochastic + self.drift_coupling + self.gradient_term


def accept_decomposition(target: Target, x, g, h: float) -> AcceptDecomposition:
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    f, grad = target.potential, target.grad
    xg = x + math.sqrt(2.0 * h) * g
    gx = grad(x)
    y = xg - h * gx
    gxg, gy = grad(xg), grad(y)
    stochastic = -f(xg) + f(x) - 0.5 * _dot(x - xg, gx + gxg)
    coupling = f(xg) - f(y) - 0.5 * _dot(x - xg, gy - gxg)
    grad_term = -0.5 * _dot(xg - y, gx + gy) + 0.25 * h * (_dot(gx, gx) - _dot(gy, gy))
    return AcceptDecomposition(
        total=mala_log_accept_general(target, x, y, h),
        stochastic=stochastic, drift_coupling=coupling, gradient_term=grad_term,
    )


@dataclass(frozen=True)
class CoordinateDrift:
    index: int
    value: float
    expectation: float
    kind: str


def mala_alpha_beta(h: float, lam):
    """MALA written as y = (1 - alpha) x + beta g along eigenvalue lam."""
    lam = np.asarray(lam, dtype=float)
    return h * lam, np.full_like(lam, math.sqrt(2.0 * h))


def coordinate_drifts(target: Target, x, g, h: float) -> list[CoordinateDrift]:
    """Per-coordinate log-acceptance contributions for one MALA noise draw.

    Quadratic coordinates give (h/4) lam^2 (x^2 - y^2), whose sum over
    coordinates is the whole log-acceptance on a quadratic target. Cosine
    coordinates give the remainder S_i of the first-order expansion around
    x_g. Each comes with its exact expectation over g.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    out = []
    s2h = math.sqrt(2.0 * h)
    for i, spec in enumerate(target.specs):
        xi, gi = float(x[i]), float(g[i])
        if spec.kind == "quadratic":
            lam = spec.lam
            a, b = h * lam, s2h
            yi = (1.0 - a) * xi + b * gi
            val = 0.25 * h * lam**2 * (xi * xi - yi * yi)
            exp = 0.25 * h * lam**2 * ((2 * a - a * a) * xi * xi - b * b)
            out.append(CoordinateDrift(i, val, exp, "quadratic"))
        else:
            f, df, _ = coordinate_functions(spec)
            xg = xi + s2h * gi
            val = -f(xg) + f(xi) - 0.5 * (xi - xg) * (df(xi) + df(xg))
            exp = cosine_drift_expectation(spec.kappa, spec.h, xi)
            out.append(CoordinateDrift(i, float(val), exp, "cosine"))
    return out


def expected_quadratic_log_accept(lam_diag, x, alpha, beta, h: float):
    """Noise-averaged log-acceptance for y = (1 - alpha) x + beta g on a quadratic.

    sum_i (h/4) lam_i^2 ((2 alpha_i - alpha_i^2) x_i^2 - beta_i^2)
    """
    lam2 = np.asarray(lam_diag, dtype=float) ** 2
    x = np.asarray(x, dtype=float)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    return 0.25 * h * np.sum(lam2 * ((2 * a - a * a) * x * x - b * b), axis=-1)


def hmc_expected_quadratic_log_accept(lam_diag, x, eta: float, K: int):
    """Same expectation for K-step HMC, with h = eta^2 / 2."""
    h = 0.5 * eta * eta
    lam = np.asarray(lam_diag, dtype=float)
    coeffs = [hmc_alpha_beta(h, float(l), K) for l in lam]
    a = np.array([c.alpha for c in coeffs])
    b = np.array([c.beta for c in coeffs])
    return expected_quadratic_log_accept(lam, x, a, b, h)


def hmc_delta_H_quadratic(lam_diag, x0, xK, eta: float):
    """H(x0, v0) - H(xK, vK) on a quadratic: (eta^2/8)(|A x0|^2 - |A xK|^2)."""
    lam = np.asarray(lam_diag, dtype=float)
    g0 = lam * np.asarray(x0, dtype=float)
    gK = lam * np.asarray(xK, dtype=float)
    return 0.125 * eta * eta * (_dot(g0, g0) - _dot(gK, gK))


def hmc_telescoped_delta_H(target: Target, path, eta: float):
    """H(x0, v0) - H(xK, vK) summed step by step from leapfrog sub-iterates.

    Each step contributes f(x_k) - f(x_{k+1}) + <grad f(x_k) + grad f(x_{k+1}), x_{k+1} - x_k>/2,
    which vanishes on quadratics; the boundary term is (eta^2/8)(|grad f(x0)|^2 - |grad f(xK)|^2).
    """
    xs = np.asarray(path.xs, dtype=float)
    grads = np.asarray(path.grads, dtype=float)
    fs = target.potential(xs)
    steps = fs[:-1] - fs[1:] + 0.5 * _dot(grads[:-1] + grads[1:], xs[1:] - xs[:-1])
    g0, gK = grads[0], grads[-1]
    return np.sum(steps, axis=0) + 0.125 * eta * eta * (_dot(g0, g0) - _dot(gK, gK))


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float,
                     abs_tol: float = 1e-12, rel_tol: float = 1e-10,
                     max_depth: int = 20, initial_panels: int = 8) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    Raises QuadratureError when a panel still fails the tolerance after
    ``max_depth`` bisections.
    """
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    edges = np.linspace(a, b, initial_panels + 1)
    panels = []
    coarse = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = 0.5 * (lo + hi)
        fa, fm, fb = fn(lo), fn(m), fn(hi)
        s = simpson(fa, fm, fb, lo, hi)
        coarse += s
        panels.append((lo, hi, fa, fm, fb, s))
    scale = max(abs(coarse), 1e-300)
    tol = max(abs_tol, rel_tol * scale)

    def refine(lo, hi, fa, fm, fb, whole, eps, depth):
        m = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + m), 0.5 * (m + hi)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, lo, m)
        right = simpson(fm, frm, fb, m, hi)
        diff = left + right - whole
        if abs(diff) <= 15.0 * eps:
            return left + right + diff / 15.0
        if depth >= max_depth:
            raise QuadratureError(
                f"no convergence on [{lo:.6g}, {hi:.6g}] after {max_depth} refinements"
            )
        return (refine(lo, m, fa, flm, fm, left, 0.5 * eps, depth + 1)
                + refine(m, hi, fm, frm, fb, right, 0.5 * eps, depth + 1))

    eps = tol / initial_panels
    return float(sum(refine(lo, hi, fa, fm, fb, s, eps, 1)
                     for lo, hi, fa, fm, fb, s in panels))


def _scalar_triplet(f_1d):
    if isinstance(f_1d, CoordinateSpec):
        return coordinate_functions(f_1d)
    f, df, d2f = f_1d
    return f, df, d2f


def remainder_lhs(f_1d, x: float, x_g: float) -> float:
    """-f(x_g) + f(x) - (x - x_g)(f'(x) + f'(x_g)) / 2, evaluated directly."""
    f, df, _ = _scalar_triplet(f_1d)
    return float(-f(x_g) + f(x) - 0.5 * (x - x_g) * (df(x) + df(x_g)))


def second_order_remainder(f_1d, x: float, x_g: float, h: float) -> float:
    """-2h g^2 int_0^1 (1/2 - s) f''(x + s(x_g - x)) ds with g^2 = (x_g - x)^2 / (2h).

    ``f_1d`` is a CoordinateSpec or a tuple ``(f, f', f'')``. Equals
    :func:`remainder_lhs` for any twice-differentiable f.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    _, _, d2f = _scalar_triplet(f_1d)
    dx = x_g - x
    if dx == 0.0:
        return 0.0
    g2 = dx * dx / (2.0 * h)
    integral = adaptive_simpson(lambda s: (0.5 - s) * float(d2f(x + s * dx)), 0.0, 1.0)
    return -2.0 * h * g2 * integral


def gaussian_cos_moment(a):
    """E[cos(a + sqrt(2) g)] for g ~ N(0, 1) = cos(a) / e."""
    return np.cos(a) / _E


def gaussian_sin_g_moment(a):
    """E[g sin(a + sqrt(2) g)] for g ~ N(0, 1) = sqrt(2) cos(a) / e."""
    return math.sqrt(2.0) * np.cos(a) / _E


def cosine_drift_expectation(kappa: float, h: float, x):
    """Exact E[S] on a cosine coordinate: (kappa h / 3)(2/e - 1) cos(x / sqrt(h))."""
    if not h > 0:
        raise ValueError("h must be positive")
    return (kappa * h / 3.0) * (2.0 / _E - 1.0) * np.cos(np.asarray(x, dtype=float) / math.sqrt(h))


def hmc_cosine_drift_coeff(K: int) -> float:
    """Leading drift coefficient c_K for K-step HMC on a cosine coordinate.

    c_K = sum_{j<K} [e^{-j^2} - e^{-(j+1)^2} - j e^{-j^2} - (j+1) e^{-(j+1)^2}],
    with c_1 = 1 - 2/e. The partial sums stay above 0.129 for every K.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    total = 0.0
    for j in range(K):
        a, b = math.exp(-j * j), math.exp(-(j + 1) ** 2)
        total += a - b - j * a - (j + 1) * b
    if total < HMC_DRIFT_COEFF_FLOOR:
        raise ArithmeticError(f"c_{K}={total} fell below {HMC_DRIFT_COEFF_FLOOR}")
    return total
