"""Empirical side of the lower bounds: witness sets, their stationary measure,
escape frequencies, Dirichlet-form gap estimates and TV witnesses.

All witness sets are products of per-block constraints over disjoint
coordinate groups, which is what lets exp(-d)-scale measures be computed
by factorization and restricted starts be drawn block by block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate, special, stats

from .kernels import KernelSpec, propose
from .rng import DrawKind, RandomStream
from .targets import CoordinateSpec, Target, coordinate_functions, exact_sample_stationary

__all__ = [
    "CI_LEVEL",
    "WitnessSet",
    "NormConstraint",
    "WindowConstraint",
    "MeasureEstimate",
    "GapEstimate",
    "TVBound",
    "StartSamplerExhausted",
    "MeasureFloorError",
    "make_witness",
    "membership",
    "clopper_pearson",
    "coordinate_window_probability",
    "set_measure_mc",
    "sample_restricted",
    "escape_probability",
    "one_step_stats",
    "dirichlet_gap_estimate",
    "tv_witness_gap",
    "tv_witness_details",
    "small_ball_log_rate",
    "SMALL_BALL_LD_RATE",
    "acceptance_scan",
    "SCAN_COLUMNS",
]

CI_LEVEL = 1e-3
# Limit of log Pr[chi2_n <= n/2] / n as n grows.
SMALL_BALL_LD_RATE = -0.5 * (math.log(2.0) - 0.5)
REJECTION_MEASURE_FLOOR = 1e-4
REJECTION_COST_CAP = 5e7
_LOG_FLOAT_FLOOR = -700.0
SCAN_COLUMNS = ("n", "mean_log_accept", "accept_rate", "escape_rate", "gap_est", "gap_se", "tv_lb")


class StartSamplerExhausted(RuntimeError):
    """Rejection sampling of a restricted start ran out of budget."""


class MeasureFloorError(ArithmeticError):
    """Set measure underflows double precision; ask for the log value instead."""


def clopper_pearson(hits: int, n: int, level: float = CI_LEVEL) -> tuple[float, float]:
    """Exact two-sided binomial interval with miscoverage ``level``."""
    if n <= 0:
        return (0.0, 1.0)
    a = level / 2.0
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(a, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(stats.beta.ppf(1.0 - a, hits + 1, n - hits))
    return lo, hi


# ---------------------------------------------------------------- witness sets

@dataclass(frozen=True)
class NormConstraint:
    """``|x_I|^2 <= bound`` (or ``>= bound`` when ``upper`` is False)."""

    indices: tuple
    bound: float
    upper: bool = True

    def contains(self, x):
        s = np.sum(x[..., list(self.indices)] ** 2, axis=-1)
        return s <= self.bound if self.upper else s >= self.bound


@dataclass(frozen=True)
class WindowConstraint:
    """Every coordinate in ``indices`` lies in the union of closed ``intervals``.

    ``coord_test`` optionally overrides interval lookup with an equivalent
    vectorized per-coordinate predicate.
    """

    indices: tuple
    intervals: tuple
    coord_test: Callable | None = field(default=None, compare=False)

    def coord_contains(self, c):
        if self.coord_test is not None:
            return self.coord_test(c)
        ok = np.zeros(np.shape(c), dtype=bool)
        for lo, hi in self.intervals:
            ok |= (c >= lo) & (c <= hi)
        return ok

    def contains(self, x):
        return np.all(self.coord_contains(x[..., list(self.indices)]), axis=-1)


@dataclass(frozen=True)
class WitnessSet:
    kind: str
    d: int
    params: dict
    constraints: tuple

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"point has dimension {x.shape[-1]}, set {self.kind} expects {self.d}")
        ok = np.ones(x.shape[:-1], dtype=bool)
        for c in self.constraints:
            ok &= c.contains(x)
        return ok

    __call__ = contains

    @property
    def constrained_indices(self) -> set:
        out = set()
        for c in self.constraints:
            out.update(c.indices)
        return out


def membership(wset: WitnessSet, x):
    """Vectorized membership test; a single point returns a Python bool."""
    r = wset.contains(x)
    return bool(r) if np.ndim(r) == 0 else r


def _omega_hard_test(h: float, cap: int):
    period = 2.0 * math.pi * math.sqrt(h)
    half = 0.45 * math.pi * math.sqrt(h)

    def test(c):
        k = np.round(c / period)
        return (np.abs(k) <= cap) & (np.abs(c - period * k) <= half)

    return test


def make_witness(kind: str, d: int, kappa: float | None = None, h: float | None = None,
                 **kw) -> WitnessSet:
    """Build a named witness set.

    ``gaussian_bad``: |x_{-1}|^2 <= 2d/(3 kappa) and x_1^2 <= 25 log d.
    ``omega_hard``: |x_1| <= 2 and every other coordinate within (9/20) pi sqrt(h)
    of 2 pi k sqrt(h) for some |k| <= floor(5/(pi sqrt(h kappa))).
    ``small_ball``: |x|^2 <= d/2. ``omega_large``: |x|^2 >= 0.81 d.
    ``hmc_bad``: |x_{2..d-1}|^2 <= 2d/(3 kappa), |x_1| <= 5 sqrt(log d), |x_d| <= log d / sqrt(kappa).
    ``slab``: |x_coord| <= half_width. ``full``: all of R^d.
    """
    if d < 1:
        raise ValueError("d must be positive")
    allidx = tuple(range(d))
    if kind == "gaussian_bad":
        _need(kind, kappa=kappa)
        r1 = 5.0 * math.sqrt(math.log(d))
        cons = (NormConstraint(tuple(range(1, d)), 2.0 * d / (3.0 * kappa)),
                WindowConstraint((0,), ((-r1, r1),)))
        params = {"kappa": kappa}
    elif kind == "omega_hard":
        _need(kind, kappa=kappa, h=h)
        cap = int(math.floor(5.0 / (math.pi * math.sqrt(h * kappa))))
        period = 2.0 * math.pi * math.sqrt(h)
        half = 0.45 * math.pi * math.sqrt(h)
        windows = tuple((k * period - half, k * period + half) for k in range(-cap, cap + 1))
        cons = (WindowConstraint((0,), ((-2.0, 2.0),)),
                WindowConstraint(tuple(range(1, d)), windows, _omega_hard_test(h, cap)))
        params = {"kappa": kappa, "h": h, "k_cap": cap}
    elif kind == "small_ball":
        cons = (NormConstraint(allidx, 0.5 * d),)
        params = {}
    elif kind == "omega_large":
        cons = (NormConstraint(allidx, 0.81 * d, upper=False),)
        params = {}
    elif kind == "hmc_bad":
        _need(kind, kappa=kappa)
        if d < 3:
            raise ValueError("hmc_bad needs d >= 3")
        r1 = 5.0 * math.sqrt(math.log(d))
        rd = math.log(d) / math.sqrt(kappa)
        cons = (NormConstraint(tuple(range(1, d - 1)), 2.0 * d / (3.0 * kappa)),
                WindowConstraint((0,), ((-r1, r1),)),
                WindowConstraint((d - 1,), ((-rd, rd),)))
        params = {"kappa": kappa}
    elif kind == "slab":
        coord = int(kw.get("coord", 0))
        w = float(kw["half_width"])
        if not 0 <= coord < d or not w > 0:
            raise ValueError("slab needs 0 <= coord < d and half_width > 0")
        cons = (WindowConstraint((coord,), ((-w, w),)),)
        params = {"coord": coord, "half_width": w}
    elif kind == "full":
        cons = ()
        params = {}
    else:
        raise ValueError(f"unknown witness set {kind!r}")
    return WitnessSet(kind=kind, d=d, params=params, constraints=cons)


def _need(kind, **vals):
    for k, v in vals.items():
        if v is None:
            raise ValueError(f"witness set {kind} needs {k}")


# ----------------------------------------------------------------- measures

@dataclass(frozen=True)
class MeasureEstimate:
    hits: int | None
    n: int
    estimate: float
    ci_lo: float
    ci_hi: float
    method: str
    log_estimate: float

    def __post_init__(self):
        if not (self.ci_lo <= self.estimate <= self.ci_hi):
            raise ValueError("interval does not contain the estimate")

    @classmethod
    def from_counts(cls, hits: int, n: int, method: str = "mc") -> "MeasureEstimate":
        est = hits / n if n else 0.0
        lo, hi = clopper_pearson(hits, n)
        return cls(hits=int(hits), n=int(n), estimate=est, ci_lo=min(lo, est),
                   ci_hi=max(hi, est), method=method,
                   log_estimate=math.log(est) if est > 0 else -math.inf)

    @classmethod
    def exact(cls, log_p: float, method: str) -> "MeasureEstimate":
        p = math.exp(log_p) if log_p > -745 else 0.0
        p = min(p, 1.0)
        return cls(hits=None, n=0, estimate=p, ci_lo=p, ci_hi=p, method=method,
                   log_estimate=float(log_p))


def _cosine_log_normalizer(spec: CoordinateSpec) -> float:
    return _cosine_log_mass(spec, -math.inf, math.inf)


def _cosine_log_mass(spec: CoordinateSpec, lo: float, hi: float) -> float:
    """log of int_lo^hi exp(-f(c) - amp) dc for a cosine coordinate, by quad.

    The integrand is split at every period boundary inside the effective
    support so quad never has to resolve many oscillations at once.
    """
    f, _, _ = coordinate_functions(spec)
    amp = spec.amplitude
    sd = math.sqrt(3.0 / (2.0 * spec.kappa))
    reach = 12.0 * sd
    a, b = max(lo, -reach), min(hi, reach)
    if a >= b:
        return -math.inf
    period = 2.0 * math.pi * math.sqrt(spec.h)
    n_cuts = (b - a) / period
    if n_cuts > 4000:
        edges = np.linspace(a, b, 4001)
    else:
        k0, k1 = math.ceil(a / period), math.floor(b / period)
        edges = np.unique(np.concatenate([[a, b], period * np.arange(k0, k1 + 1)]))
        edges = edges[(edges >= a) & (edges <= b)]
    total = 0.0
    for l, r in zip(edges[:-1], edges[1:]):
        if r > l:
            val, _ = integrate.quad(lambda c: math.exp(-f(c) - amp), l, r,
                                    epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
    return math.log(total) if total > 0 else -math.inf


def coordinate_window_probability(spec: CoordinateSpec, intervals) -> float:
    """Stationary marginal probability that one coordinate lies in the union of intervals."""
    return math.exp(_log_window_prob(spec, intervals))


def _log_window_prob(spec: CoordinateSpec, intervals) -> float:
    if spec.kind == "quadratic":
        s = math.sqrt(spec.lam)
        p = sum(special.ndtr(hi * s) - special.ndtr(lo * s) for lo, hi in intervals)
        # Complement form keeps precision when the window covers almost everything.
        if p > 0.5:
            q = special.ndtr(intervals[0][0] * s) + special.ndtr(-intervals[-1][1] * s)
            for (_, h0), (l1, _) in zip(intervals[:-1], intervals[1:]):
                q += special.ndtr(l1 * s) - special.ndtr(h0 * s)
            return math.log1p(-q)
        return math.log(p) if p > 0 else -math.inf
    log_z = _cosine_log_normalizer(spec)
    masses = [_cosine_log_mass(spec, lo, hi) for lo, hi in intervals]
    return float(special.logsumexp(masses) - log_z) if masses else -math.inf


def _equal_lambda(target: Target, idx) -> float | None:
    specs = {target.specs[i] for i in idx}
    if len(specs) == 1:
        (s,) = specs
        if s.kind == "quadratic":
            return s.lam
    return None


def _constraint_log_prob(target: Target, c) -> float | None:
    if isinstance(c, NormConstraint):
        lam = _equal_lambda(target, c.indices)
        if lam is None:
            return None
        k = len(c.indices)
        if c.upper:
            return float(stats.chi2.logcdf(c.bound * lam, k))
        return float(stats.chi2.logsf(c.bound * lam, k))
    total = 0.0
    groups: dict = {}
    for i in c.indices:
        groups[target.specs[i]] = groups.get(target.specs[i], 0) + 1
    for spec, count in groups.items():
        total += count * _log_window_prob(spec, c.intervals)
    return total


def set_log_measure(target: Target, wset: WitnessSet) -> float | None:
    """Exact log stationary measure of a product set, or None if it does not factor."""
    if wset.d != target.d:
        raise ValueError("witness set and target dimensions differ")
    total = 0.0
    for c in wset.constraints:
        lp = _constraint_log_prob(target, c)
        if lp is None:
            return None
        total += lp
    return total


def set_measure_mc(target: Target, wset: WitnessSet, n: int, rng, method: str = "auto",
                   log_only: bool = False) -> MeasureEstimate:
    """Stationary measure of a witness set.

    ``auto`` uses the factorized computation whenever every block is a
    window (1-D quadrature or normal CDF per coordinate) or a norm ball on
    an equal-curvature Gaussian block (chi-square CDF); otherwise it
    classifies ``n`` exact stationary draws. ``mc`` forces direct sampling.
    When the factorized measure underflows double precision a
    MeasureFloorError is raised unless ``log_only`` is set.
    """
    if not target.separable:
        raise ValueError("measure estimation needs a separable target")
    if method not in ("auto", "mc", "factorized"):
        raise ValueError(f"unknown method {method!r}")
    if method != "mc":
        lp = set_log_measure(target, wset)
        if lp is not None:
            if lp < _LOG_FLOAT_FLOOR and not log_only:
                raise MeasureFloorError(
                    f"log measure {lp:.4g} is below the double-precision floor; use log_only=True"
                )
            return MeasureEstimate.exact(lp, "factorized")
        if method == "factorized":
            raise ValueError(f"set {wset.kind} does not factor over this target")
    if n <= 0:
        raise ValueError("direct estimation needs n > 0")
    xs = exact_sample_stationary(target, n, rng)
    return MeasureEstimate.from_counts(int(np.sum(wset.contains(xs))), n, "mc")


# ---------------------------------------------------------- restricted starts

def _as_gen(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator(DrawKind.START)
    return rng


def _sample_window_coord(spec: CoordinateSpec, c: WindowConstraint, n: int,
                         gen: np.random.Generator, max_draws: int) -> np.ndarray:
    from .targets import sample_coordinate

    if spec.kind == "quadratic" and len(c.intervals) == 1:
        lo, hi = c.intervals[0]
        s = 1.0 / math.sqrt(spec.lam)
        return stats.truncnorm.rvs(lo / s, hi / s, scale=s, size=n, random_state=gen)
    out = np.empty(n)
    pending = np.arange(n)
    drawn = 0
    budget = max_draws + 50 * n
    while pending.size:
        if drawn > budget:
            raise StartSamplerExhausted(f"window sampler exceeded {budget} draws")
        m = max(pending.size * 2, 64)
        cand = sample_coordinate(spec, m, gen)
        drawn += m
        cand = cand[c.coord_contains(cand)]
        take = min(cand.size, pending.size)
        out[pending[:take]] = cand[:take]
        pending = pending[take:]
    return out


def _sample_norm_block(lam: float, c: NormConstraint, n: int, gen: np.random.Generator):
    k = len(c.indices)
    t = c.bound * lam
    u = gen.random(n)
    if c.upper:
        r2 = stats.chi2.ppf(u * stats.chi2.cdf(t, k), k)
    else:
        r2 = stats.chi2.isf(u * stats.chi2.sf(t, k), k)
    z = gen.standard_normal((n, k))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * np.sqrt(r2 / lam)[:, None]


def sample_restricted(target: Target, wset: WitnessSet, n: int, rng,
                      max_draws: int = 20_000_000, method: str = "auto") -> np.ndarray:
    """``n`` i.i.d. draws from the stationary law conditioned on the witness set.

    Rejection from the exact sampler when the set has measure >= 1e-4 and
    the expected number of drawn floats stays under 5e7; otherwise
    block-by-block conditional sampling, which is valid because witness sets
    are products over disjoint coordinate blocks of a separable target.
    """
    gen = _as_gen(rng)
    if n == 0:
        return np.empty((0, target.d))
    lp = set_log_measure(target, wset)
    if method == "auto":
        # Rejection also needs an affordable expected cost in drawn floats.
        cheap = lp is not None and math.log(n * target.d) - lp <= math.log(REJECTION_COST_CAP)
        if lp is None or (lp >= math.log(REJECTION_MEASURE_FLOOR) and cheap):
            method = "rejection"
        else:
            method = "conditional"
    if method == "rejection":
        out = []
        got = drawn = 0
        batch = max(256, min(1 << 16, int(2 * n / max(math.exp(lp), 1e-4)) if lp is not None else 4 * n))
        while got < n:
            if drawn >= max_draws:
                raise StartSamplerExhausted(
                    f"only {got}/{n} starts in {wset.kind} after {drawn} stationary draws"
                )
            xs = exact_sample_stationary(target, batch, gen)
            drawn += batch
            xs = xs[wset.contains(xs)]
            out.append(xs[: n - got])
            got += min(xs.shape[0], n - got)
        return np.concatenate(out, axis=0)
    if method != "conditional":
        raise ValueError(f"unknown method {method!r}")
    x = exact_sample_stationary(target, n, gen)
    for c in wset.constraints:
        idx = list(c.indices)
        if isinstance(c, NormConstraint):
            lam = _equal_lambda(target, idx)
            if lam is None:
                raise StartSamplerExhausted("norm block without equal Gaussian curvature")
            x[:, idx] = _sample_norm_block(lam, c, n, gen)
        else:
            for spec in {target.specs[i] for i in idx}:
                cols = [i for i in idx if target.specs[i] == spec]
                vals = _sample_window_coord(spec, c, n * len(cols), gen, max_draws)
                x[:, cols] = vals.reshape(n, len(cols))
    return x


# ------------------------------------------------------------ one-step stats

def _batch_noise(rng: RandomStream, n: int, d: int):
    """Noise rows and uniforms for ``n`` independent one-step trials; row t is trial t."""
    g = rng.normals(DrawKind.NOISE, 0, d, n)
    u = rng.uniforms(DrawKind.ACCEPT, 0, 1, n)[:, 0]
    return g, u


@dataclass(frozen=True)
class OneStepStats:
    n: int
    mean_log_accept: float
    accept_rate: float
    escape: MeasureEstimate
    log_accepts: np.ndarray
    accepted: np.ndarray
    next_states: np.ndarray


def one_step_stats(kernel: KernelSpec, target: Target, starts, rng: RandomStream,
                   wset: WitnessSet | None = None, chunk: int = 0) -> OneStepStats:
    """One kernel step from each start; escape counts accepted moves that leave ``wset``."""
    starts = np.asarray(starts, dtype=float)
    n, d = starts.shape
    g, u = _batch_noise(rng, n, d)
    chunk = chunk or max(1, (1 << 22) // max(d, 1))
    las, ys = np.empty(n), np.empty_like(starts)
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        y, la, _, _ = propose(kernel, target, starts[s:e], g[s:e])
        las[s:e], ys[s:e] = la, y
    acc = np.log(u) < las
    nxt = np.where(acc[:, None], ys, starts)
    if wset is not None:
        left = acc & ~wset.contains(ys)
    else:
        left = acc
    return OneStepStats(n=n, mean_log_accept=float(np.mean(las)), accept_rate=float(np.mean(acc)),
                        escape=MeasureEstimate.from_counts(int(left.sum()), n, "mc"),
                        log_accepts=las, accepted=acc, next_states=nxt)


def escape_probability(kernel: KernelSpec, target: Target, wset: WitnessSet, n: int,
                       rng: RandomStream) -> MeasureEstimate:
    """Frequency of accepted one-step moves leaving ``wset`` from stationary-restricted starts."""
    starts = sample_restricted(target, wset, n, rng.generator(DrawKind.START))
    return one_step_stats(kernel, target, starts, rng, wset).escape


# --------------------------------------------------------------- spectral gap

@dataclass(frozen=True)
class GapEstimate:
    numerator: float
    numerator_se: float
    variance: float
    variance_se: float
    ratio: float
    ratio_se: float
    n: int
    accept_rate: float


def dirichlet_gap_estimate(kernel, target: Target, n: int, rng: RandomStream, coord: int = 0,
                           stationary=None, variance: float | None = None) -> GapEstimate:
    """Dirichlet ratio E(g, g) / Var(g) for the coordinate projection g(x) = x[coord].

    E(g, g) is half the mean squared change of g over one transition from
    stationary starts (zero on rejection). ``kernel`` is a KernelSpec or a
    callable ``(starts, rng) -> next_states`` for toy kernels. The variance
    is the exact marginal variance when the coordinate is quadratic.
    """
    if n <= 1:
        raise ValueError("need n >= 2 samples")
    xs = stationary if stationary is not None else exact_sample_stationary(
        target, n, rng.generator(DrawKind.START))
    xs = np.asarray(xs, dtype=float)
    if isinstance(kernel, KernelSpec):
        st = one_step_stats(kernel, target, xs, rng)
        nxt, acc_rate = st.next_states, st.accept_rate
    else:
        nxt = np.asarray(kernel(xs, rng), dtype=float)
        acc_rate = float(np.mean(np.any(nxt != xs, axis=-1)))
    half_sq = 0.5 * (xs[:, coord] - nxt[:, coord]) ** 2
    num = float(np.mean(half_sq))
    num_se = float(np.std(half_sq, ddof=1) / math.sqrt(n))
    if variance is None and target.specs[coord].kind == "quadratic":
        variance = target.marginal_variance(coord)
    if variance is not None:
        var, var_se = float(variance), 0.0
        ratio, ratio_se = num / var, num_se / var
    else:
        c = xs[:, coord] - xs[:, coord].mean()
        var = float(np.mean(c * c) * n / (n - 1))
        var_se = float(np.std(c * c, ddof=1) / math.sqrt(n))
        ratio = num / var
        cov = float(np.cov(half_sq, c * c)[0, 1]) / n
        ratio_se = math.sqrt(max(0.0, num_se**2 / var**2 + num**2 * var_se**2 / var**4
                                 - 2 * num * cov / var**3))
    return GapEstimate(numerator=num, numerator_se=num_se, variance=var, variance_se=var_se,
                       ratio=ratio, ratio_se=ratio_se, n=n, accept_rate=acc_rate)


# ------------------------------------------------------------- TV witnesses

@dataclass(frozen=True)
class TVBound:
    lower: float
    chain: MeasureEstimate
    stationary: MeasureEstimate

    def __float__(self):
        return self.lower


def _freq(states, witness: WitnessSet) -> MeasureEstimate:
    states = np.asarray(states, dtype=float)
    hits = int(np.sum(witness.contains(states)))
    return MeasureEstimate.from_counts(hits, states.shape[0])


def tv_witness_details(chain_states, stationary, witness: WitnessSet) -> TVBound:
    """TV lower bound from one witness set: the gap between the two frequency
    intervals, floored at zero.

    ``chain_states`` holds independent chain states at one time (one per
    trial). ``stationary`` is an array of stationary draws, a
    MeasureEstimate, or an exact probability.
    """
    chain = _freq(chain_states, witness)
    if isinstance(stationary, MeasureEstimate):
        stat = stationary
    elif np.ndim(stationary) == 0:
        p = float(stationary)
        stat = MeasureEstimate.exact(math.log(p) if p > 0 else -math.inf, "exact")
    else:
        stat = _freq(stationary, witness)
    lower = max(0.0, stat.ci_lo - chain.ci_hi, chain.ci_lo - stat.ci_hi)
    return TVBound(lower=lower, chain=chain, stationary=stat)


def tv_witness_gap(chain_states, stationary, witness: WitnessSet) -> float:
    return tv_witness_details(chain_states, stationary, witness).lower


def small_ball_log_rate(n: int) -> dict:
    """log Pr[chi2_n <= n/2] / n, with its large-deviation limit for comparison.

    The limit is -(1/2)(ln 2 - 1/2) ~ -0.0966, which decays faster than exp(-n/12).
    """
    rate = float(stats.chi2.logcdf(0.5 * n, n)) / n
    return {"n": n, "rate": rate, "ld_limit": SMALL_BALL_LD_RATE, "claimed": -1.0 / 12.0,
            "exceeds_claim": rate < -1.0 / 12.0}


# ------------------------------------------------------------------- scan

def acceptance_scan(target_family, kernel_grid: Sequence, start_set, trials: int,
                    rng: RandomStream, gap_samples: int = 0, gap_coord: int = 0) -> list[dict]:
    """One-step statistics over a grid of kernels.

    ``target_family`` is a Target or a callable mapping a grid entry's
    KernelSpec to a Target. ``start_set`` is a WitnessSet, a callable
    ``target -> WitnessSet``, or None for stationary starts. Grid point ``i``
    draws from ``rng.spawn(rng.trial * 65536 + i)`` so rows are independent
    of grid order. ``tv_lb`` compares the one-step distribution's mass on the
    start set with the set's stationary measure.
    """
    if not kernel_grid:
        raise ValueError("kernel grid is empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for i, kern in enumerate(kernel_grid):
        kern = kern if isinstance(kern, KernelSpec) else KernelSpec.from_dict(kern)
        target = target_family(kern) if callable(target_family) and not isinstance(target_family, Target) else target_family
        wset = start_set(target) if callable(start_set) and not isinstance(start_set, WitnessSet) else start_set
        sub = rng.spawn(rng.trial * 65536 + i)
        if wset is None:
            starts = exact_sample_stationary(target, trials, sub.generator(DrawKind.START))
        else:
            starts = sample_restricted(target, wset, trials, sub.generator(DrawKind.START))
        st = one_step_stats(kern, target, starts, sub, wset)
        row = {**{f"{k}": v for k, v in kern.to_dict().items()}, "n": trials,
               "mean_log_accept": st.mean_log_accept, "accept_rate": st.accept_rate,
               "escape_rate": st.escape.estimate if wset is not None else float("nan")}
        if gap_samples:
            gap = dirichlet_gap_estimate(kern, target, gap_samples, sub.spawn((sub.trial + 1) << 20),
                                         coord=gap_coord)
            row["gap_est"], row["gap_se"] = gap.ratio, gap.ratio_se
        else:
            row["gap_est"] = row["gap_se"] = float("nan")
        if wset is not None:
            meas = set_measure_mc(target, wset, 100_000, sub.generator(DrawKind.AUX), log_only=True)
            row["tv_lb"] = tv_witness_gap(st.next_states, meas, wset)
        else:
            row["tv_lb"] = float("nan")
        rows.append(row)
    return rows
