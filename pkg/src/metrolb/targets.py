"""Separable target densities exp(-f) and the hard instances built from them.

All constructions fix the strong-convexity scale to 1 and put the minimizer at
the origin, so curvature lives in ``[1, kappa]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import DrawKind, RandomStream

__all__ = [
    "DomainError",
    "SamplerGuardError",
    "CoordinateSpec",
    "Target",
    "make_hard_quadratic",
    "make_hqc",
    "make_resonant_gaussian",
    "make_cosine_hard",
    "make_isotropic_gaussian",
    "make_diagonal_quadratic",
    "make_scale_adaptive_resonant",
    "exact_sample_stationary",
    "coordinate_functions",
]

MAX_REJECTION_ATTEMPTS = 10**6


class DomainError(ValueError):
    """Constructor arguments outside the construction's valid range."""


class SamplerGuardError(RuntimeError):
    """Exact sampler refused to run or exceeded its retry budget."""


@dataclass(frozen=True)
class CoordinateSpec:
    """One coordinate of a separable potential.

    ``quadratic``: ``f(c) = lam c^2 / 2``.
    ``cosine``: ``f(c) = (kappa/3) c^2 - (kappa h / 3) cos(c / sqrt(h))``, whose
    curvature ``2 kappa/3 + (kappa/3) cos(c/sqrt(h))`` stays in ``[kappa/3, kappa]``.
    """

    kind: str
    lam: float | None = None
    kappa: float | None = None
    h: float | None = None

    def __post_init__(self):
        if self.kind == "quadratic":
            if self.lam is None or not self.lam > 0:
                raise DomainError(f"quadratic coordinate needs lam > 0, got {self.lam}")
        elif self.kind == "cosine":
            if self.kappa is None or self.h is None:
                raise DomainError("cosine coordinate needs kappa and h")
            if not self.h > 0:
                raise DomainError(f"cosine coordinate needs h > 0, got {self.h}")
            if not self.kappa > 0:
                raise DomainError(f"cosine coordinate needs kappa > 0, got {self.kappa}")
        else:
            raise DomainError(f"unknown coordinate kind {self.kind!r}")

    @property
    def quad_coef(self) -> float:
        return self.lam if self.kind == "quadratic" else 2.0 * self.kappa / 3.0

    @property
    def amplitude(self) -> float:
        return 0.0 if self.kind == "quadratic" else self.kappa * self.h / 3.0

    @property
    def frequency(self) -> float:
        return 1.0 if self.kind == "quadratic" else 1.0 / math.sqrt(self.h)

    @property
    def curvature_range(self) -> tuple[float, float]:
        if self.kind == "quadratic":
            return (self.lam, self.lam)
        return (self.kappa / 3.0, self.kappa)


class Target:
    """Separable potential ``f(x) = sum_i f_i(x_i)`` with analytic gradient.

    Points may be a single vector of shape ``(d,)`` or a stack ``(..., d)``;
    ``potential`` reduces over the last axis.
    """

    def __init__(self, specs, name: str = "custom", curvature_bounds=None, info=None):
        specs = list(specs)
        if not specs:
            raise DomainError("target needs at least one coordinate")
        self.specs = tuple(specs)
        self.name = name
        self.d = len(specs)
        self.separable = True
        self.info = dict(info or {})
        self._quad = np.array([s.quad_coef for s in specs], dtype=float)
        self._amp = np.array([s.amplitude for s in specs], dtype=float)
        self._freq = np.array([s.frequency for s in specs], dtype=float)
        self._has_cos = bool(np.any(self._amp > 0))
        if curvature_bounds is None:
            lo = min(s.curvature_range[0] for s in specs)
            hi = max(s.curvature_range[1] for s in specs)
            curvature_bounds = (lo, hi)
        self.mu_lo, self.L_hi = (float(curvature_bounds[0]), float(curvature_bounds[1]))
        for arr in (self._quad, self._amp, self._freq):
            arr.setflags(write=False)

    def __repr__(self):
        return f"Target({self.name!r}, d={self.d}, curvature=[{self.mu_lo:g}, {self.L_hi:g}])"

    @property
    def is_quadratic(self) -> bool:
        return not self._has_cos

    @property
    def quadratic_diag(self) -> np.ndarray:
        """Diagonal of A for ``f = x^T A x / 2``; only defined for quadratic targets."""
        if self._has_cos:
            raise DomainError(f"{self.name} is not a quadratic target")
        return self._quad

    def coord_potential(self, x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * self._quad * x * x
        if self._has_cos:
            out = out - self._amp * np.cos(self._freq * x)
        return out

    def potential(self, x):
        return np.sum(self.coord_potential(x), axis=-1)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        out = self._quad * x
        if self._has_cos:
            out = out + self._amp * self._freq * np.sin(self._freq * x)
        return out

    def coord_curvature(self, x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(self._quad, x.shape).copy()
        if self._has_cos:
            out = out + self._amp * self._freq**2 * np.cos(self._freq * x)
        return out

    def marginal_variance(self, i: int) -> float:
        spec = self.specs[i]
        if spec.kind != "quadratic":
            raise DomainError(f"coordinate {i} is not quadratic; no closed-form variance")
        return 1.0 / spec.lam


def _check_kappa(kappa, lo=1.0):
    if not (math.isfinite(kappa) and kappa >= lo):
        raise DomainError(f"kappa must be >= {lo:g}, got {kappa}")


def make_diagonal_quadratic(lams, name="diag_quadratic", curvature_bounds=None, info=None) -> Target:
    specs = [CoordinateSpec("quadratic", lam=float(v)) for v in lams]
    return Target(specs, name=name, curvature_bounds=curvature_bounds, info=info)


def make_hard_quadratic(d: int, kappa: float) -> Target:
    """diag(1, kappa, ..., kappa)."""
    if d < 2:
        raise DomainError(f"hard quadratic needs d >= 2, got {d}")
    _check_kappa(kappa)
    return make_diagonal_quadratic(
        [1.0] + [kappa] * (d - 1), name="hq", curvature_bounds=(1.0, kappa),
        info={"d": d, "kappa": kappa},
    )


def make_hqc(d: int, kappa: float) -> Target:
    """diag(1, kappa/pi^2, ..., kappa/pi^2, kappa)."""
    if d < 3:
        raise DomainError(f"hqc needs d >= 3, got {d}")
    if not kappa >= math.pi**2:
        raise DomainError(f"hqc needs kappa >= pi^2, got {kappa}")
    mid = kappa / math.pi**2
    return make_diagonal_quadratic(
        [1.0] + [mid] * (d - 2) + [kappa], name="hqc", curvature_bounds=(1.0, kappa),
        info={"d": d, "kappa": kappa},
    )


def make_resonant_gaussian(d: int, kappa: float, eta: float, K: int) -> tuple[Target, int]:
    """diag(1, lam, kappa, ..., kappa) with lam = 2(1 - cos(j pi / K)) / eta^2.

    ``j`` is the smallest index in ``[1, K-1]`` placing ``lam`` in ``[1, kappa]``.
    On the second coordinate the K-step leapfrog map is then exactly +-identity.
    """
    from .chebyshev import resonant_lambda

    if d < 2:
        raise DomainError(f"resonant target needs d >= 2, got {d}")
    if K < 2:
        raise DomainError(f"resonance needs K >= 2, got {K}")
    if not kappa >= math.pi**2:
        raise DomainError(f"resonance needs kappa >= pi^2, got {kappa}")
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    lo = math.pi**2 / (kappa * K * K)
    eta2 = eta * eta
    tol = 1e-12
    if eta2 < lo * (1 - tol) or eta2 > 1.0 + tol:
        raise DomainError(f"eta^2={eta2:g} outside [{lo:g}, 1]")
    for j in range(1, K):
        lam = resonant_lambda(eta, K, j)
        if 1.0 - tol <= lam <= kappa * (1 + tol):
            target = make_diagonal_quadratic(
                [1.0, lam] + [kappa] * (d - 2), name="resonant",
                curvature_bounds=(1.0, kappa),
                info={"d": d, "kappa": kappa, "eta": eta, "K": K, "j": j, "lam": lam},
            )
            return target, j
    raise DomainError(f"no resonant j in [1, {K - 1}] gives lam in [1, {kappa}] at eta={eta}")


def make_scale_adaptive_resonant(eta: float, K: int, j: int = 1) -> Target:
    """One-dimensional quadratic whose scale is picked to resonate with (eta, K)."""
    from .chebyshev import resonant_lambda

    lam = resonant_lambda(eta, K, j)
    return make_diagonal_quadratic(
        [lam], name="adaptive_resonant", info={"eta": eta, "K": K, "j": j, "lam": lam}
    )


def make_cosine_hard(d: int, kappa: float, h: float) -> Target:
    """c^2/2 on coordinate 1; (kappa/3)c^2 - (kappa h/3)cos(c/sqrt h) elsewhere.

    The same family parameterized by a leapfrog step eta is obtained with h = eta^2 / 2.
    """
    if d < 2:
        raise DomainError(f"cosine target needs d >= 2, got {d}")
    _check_kappa(kappa, lo=3.0)
    if not (h > 0 and math.isfinite(h)):
        raise DomainError(f"h must be positive, got {h}")
    specs = [CoordinateSpec("quadratic", lam=1.0)]
    specs += [CoordinateSpec("cosine", kappa=kappa, h=h)] * (d - 1)
    return Target(specs, name="cosine", curvature_bounds=(1.0, kappa),
                  info={"d": d, "kappa": kappa, "h": h})


def make_isotropic_gaussian(d: int, lam: float = 1.0) -> Target:
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    return make_diagonal_quadratic([lam] * d, name="gaussian_iso", info={"d": d, "lam": lam})


def coordinate_functions(spec: CoordinateSpec) -> tuple[Callable, Callable, Callable]:
    """Scalar (f, f', f'') for one coordinate."""
    q, a, w = spec.quad_coef, spec.amplitude, spec.frequency

    def f(c):
        return 0.5 * q * c * c - a * np.cos(w * c)

    def df(c):
        return q * c + a * w * np.sin(w * c)

    def d2f(c):
        return q + a * w * w * np.cos(w * c)

    return f, df, d2f


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator(DrawKind.SAMPLER)
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


def _sample_cosine(kappa: float, h: float, n: int, gen: np.random.Generator) -> np.ndarray:
    amp = kappa * h / 3.0
    if 2.0 * amp > 20.0:
        raise SamplerGuardError(
            f"cosine envelope acceptance exp(-{2 * amp:.3g}) is below exp(-20)"
        )
    sd = math.sqrt(3.0 / (2.0 * kappa))
    inv_sqrt_h = 1.0 / math.sqrt(h)
    out = np.empty(n)
    pending = np.arange(n)
    attempts = 0
    while pending.size:
        attempts += 1
        if attempts > MAX_REJECTION_ATTEMPTS:
            raise SamplerGuardError(
                f"cosine rejection sampler exceeded {MAX_REJECTION_ATTEMPTS} attempts"
            )
        c = gen.normal(0.0, sd, size=pending.size)
        u = gen.random(pending.size)
        keep = np.log1p(-u) <= amp * (np.cos(c * inv_sqrt_h) - 1.0)
        out[pending[keep]] = c[keep]
        pending = pending[~keep]
    return out


def sample_coordinate(spec: CoordinateSpec, n: int, gen: np.random.Generator) -> np.ndarray:
    """i.i.d. draws from the normalized marginal exp(-f_i)."""
    if spec.kind == "quadratic":
        return gen.normal(0.0, 1.0 / math.sqrt(spec.lam), size=n)
    return _sample_cosine(spec.kappa, spec.h, n, gen)


def exact_sample_stationary(target: Target, n: int, rng) -> np.ndarray:
    """``n`` i.i.d. draws from exp(-f), shape ``(n, d)``.

    Quadratic coordinates are drawn exactly; cosine coordinates by rejection
    against the Gaussian envelope exp(-kappa c^2 / 3).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not target.separable:
        raise DomainError("exact sampling needs a separable target")
    out = np.empty((n, target.d))
    if n == 0:
        return out
    gen = _as_generator(rng)
    # Group identical coordinate specs so each group is one vectorized draw.
    groups: dict[CoordinateSpec, list[int]] = {}
    for i, spec in enumerate(target.specs):
        groups.setdefault(spec, []).append(i)
    for spec, idx in groups.items():
        draws = sample_coordinate(spec, n * len(idx), gen)
        out[:, idx] = draws.reshape(n, len(idx))
    return out
