"""Leapfrog dynamics on quadratics as Chebyshev polynomials.

On ``f(x) = lam x^2 / 2`` the K-step leapfrog map is linear:

    x_K = p_K(eta^2 lam) x_0 + eta q_K(eta^2 lam) v_0

with ``p_k(z) = T_k(1 - z/2)`` and ``q_k(z) = U_{k-1}(1 - z/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "LeapfrogCoefficients",
    "StepCoefficients",
    "leapfrog_coeffs",
    "eval_p",
    "eval_q",
    "chebyshev_T",
    "chebyshev_U",
    "hmc_alpha_beta",
    "resonant_lambda",
    "closed_form_hmc_map",
    "K_MAX",
    "K_EXACT_MAX",
]

K_MAX = 64
K_EXACT_MAX = 20


@dataclass(frozen=True)
class LeapfrogCoefficients:
    """Coefficients of p_K (``D``, length K+1) and q_K (``E``, length K) in powers of z."""

    K: int
    D: np.ndarray
    E: np.ndarray

    def p(self, z):
        return np.polynomial.polynomial.polyval(z, self.D)

    def q(self, z):
        return np.polynomial.polynomial.polyval(z, self.E)


@dataclass(frozen=True)
class StepCoefficients:
    """One-step proposal ``y = (1 - alpha) x + beta g`` along an eigendirection."""

    alpha: float
    beta: float
    h: float
    lam: float
    K: int


def _exact_D(j: int, k: int) -> Fraction:
    return (-1) ** j * Fraction(k, k + j) * math.comb(k + j, 2 * j)


def _exact_E(j: int, k: int) -> int:
    return (-1) ** j * math.comb(k + j, 2 * j + 1)


def leapfrog_coeffs(K: int) -> LeapfrogCoefficients:
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    if K > K_MAX:
        raise ValueError(f"K={K} exceeds the coefficient overflow guard K <= {K_MAX}")
    K = int(K)
    if K <= K_EXACT_MAX:
        D = np.array([float(_exact_D(j, K)) for j in range(K + 1)])
        E = np.array([float(_exact_E(j, K)) for j in range(K)])
        return LeapfrogCoefficients(K, D, E)

    # Float recurrence in k: c_{k+1} = (2 - z) c_k - c_{k-1}, coefficientwise.
    def advance(prev, cur):
        nxt = np.zeros(cur.size + 1)
        nxt[: cur.size] += 2.0 * cur
        nxt[1:] -= cur
        nxt[: prev.size] -= prev
        return nxt

    p_prev, p_cur = np.array([1.0]), np.array([1.0, -0.5])
    q_prev, q_cur = np.array([1.0]), np.array([2.0, -1.0])
    for _ in range(1, K):
        p_prev, p_cur = p_cur, advance(p_prev, p_cur)
    for _ in range(2, K):
        q_prev, q_cur = q_cur, advance(q_prev, q_cur)
    return LeapfrogCoefficients(K, p_cur, q_cur)


def _recurrence(K: int, z, first, second):
    z = np.asarray(z, dtype=float)
    a = np.full_like(z, first, dtype=float) if np.isscalar(first) else first
    if K == 0:
        return a
    b = second
    c = 2.0 - z
    for _ in range(1, K):
        a, b = b, c * b - a
    return b


def eval_p(K: int, z):
    """p_K(z) by the three-term recurrence, p_0 = 1, p_1 = 1 - z/2."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    z = np.asarray(z, dtype=float)
    if K == 0:
        return np.ones_like(z)[()]
    return _recurrence(K, z, np.ones_like(z), 1.0 - 0.5 * z)[()]


def eval_q(K: int, z):
    """q_K(z) by the same recurrence, q_0 = 0, q_1 = 1."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    z = np.asarray(z, dtype=float)
    if K == 0:
        return np.zeros_like(z)[()]
    return _recurrence(K, z, np.zeros_like(z), np.ones_like(z))[()]


def chebyshev_T(k: int, w):
    """T_k(w): cos/arccos inside [-1, 1], cosh/arccosh outside."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    inside = np.abs(w) <= 1.0
    out[inside] = np.cos(k * np.arccos(w[inside]))
    wo = w[~inside]
    sign = np.where(wo < 0, (-1.0) ** k, 1.0)
    out[~inside] = sign * np.cosh(k * np.arccosh(np.abs(wo)))
    return out[()]


def chebyshev_U(k: int, w):
    """U_k(w): sin((k+1)t)/sin t inside, sinh ratio outside, limits at +-1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    at_edge = np.abs(w) == 1.0
    inside = (np.abs(w) < 1.0)
    t = np.arccos(w[inside])
    out[inside] = np.sin((k + 1) * t) / np.sin(t)
    we = w[at_edge]
    out[at_edge] = np.where(we > 0, 1.0, (-1.0) ** k) * (k + 1)
    outside = np.abs(w) > 1.0
    wo = w[outside]
    s = np.arccosh(np.abs(wo))
    sign = np.where(wo < 0, (-1.0) ** k, 1.0)
    out[outside] = sign * np.sinh((k + 1) * s) / np.sinh(s)
    return out[()]


def hmc_alpha_beta(h: float, lam: float, K: int) -> StepCoefficients:
    """alpha = 1 - p_K(2 h lam), beta = sqrt(2h) q_K(2 h lam); leapfrog step eta = sqrt(2h).

    When 2 h lam K^2 <= 1 both are within [0.8, 1] of their leading terms
    h lam K^2 and sqrt(2h) K.
    """
    if not (h > 0 and lam > 0):
        raise ValueError("h and lam must be positive")
    z = 2.0 * h * lam
    alpha = 1.0 - float(eval_p(K, z))
    beta = math.sqrt(2.0 * h) * float(eval_q(K, z))
    if z * K * K <= 1.0:
        a_lead, b_lead = h * lam * K * K, math.sqrt(2.0 * h) * K
        slack = 1e-12
        if not (0.8 * a_lead * (1 - slack) <= alpha <= a_lead * (1 + slack)):
            raise ArithmeticError(f"alpha={alpha} outside [0.8, 1] x {a_lead}")
        if not (0.8 * b_lead * (1 - slack) <= beta <= b_lead * (1 + slack)):
            raise ArithmeticError(f"beta={beta} outside [0.8, 1] x {b_lead}")
    return StepCoefficients(alpha=alpha, beta=beta, h=h, lam=lam, K=K)


def resonant_lambda(eta: float, K: int, j: int) -> float:
    """Eigenvalue at which the K-step leapfrog map is +-identity: 2(1 - cos(j pi/K)) / eta^2."""
    if not 1 <= j <= K - 1:
        raise ValueError(f"resonance index j must be in [1, {K - 1}], got {j}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    return 2.0 * (1.0 - math.cos(j * math.pi / K)) / (eta * eta)


def closed_form_hmc_map(lam, eta, K: int, x0, v0):
    """Final leapfrog position on ``lam x^2 / 2``: p_K(eta^2 lam) x0 + eta q_K(eta^2 lam) v0."""
    z = np.asarray(eta, dtype=float) ** 2 * np.asarray(lam, dtype=float)
    return eval_p(K, z) * x0 + eta * eval_q(K, z) * v0
