"""Metropolis-adjusted Langevin (MALA) and leapfrog HMC kernels, plus chain runners.

Every kernel function accepts a single point of shape ``(d,)`` or a stack of
points ``(n, d)`` and works row by row, so batched chains produce exactly the
same numbers as running each chain on its own.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .rng import DrawKind, RandomStream
from .targets import Target

__all__ = [
    "KernelSpec",
    "LeapfrogPath",
    "TransitionRecord",
    "RecordPolicy",
    "Trace",
    "NonFiniteStateError",
    "mala_step",
    "hmc_step",
    "leapfrog_trajectory",
    "propose",
    "run_chain",
    "run_chains",
]

# Upper bound on pre-drawn noise held in memory at once (float64 elements).
_NOISE_BLOCK_ELEMS = 1 << 22


class NonFiniteStateError(FloatingPointError):
    """A proposal or state became non-finite; carries where it happened."""

    def __init__(self, step: int, trial: int | None = None, detail: str = ""):
        self.step = step
        self.trial = trial
        where = f"step {step}" + (f", trial {trial}" if trial is not None else "")
        super().__init__(f"non-finite value at {where}" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class KernelSpec:
    """``mala`` with step ``h`` or ``hmc`` with leapfrog step ``eta`` and ``K`` steps."""

    kind: str
    h: float | None = None
    eta: float | None = None
    K: int | None = None

    def __post_init__(self):
        if self.kind == "mala":
            if self.h is None or not (self.h > 0 and math.isfinite(self.h)):
                raise ValueError(f"MALA needs h > 0, got {self.h}")
        elif self.kind == "hmc":
            if self.eta is None or not (self.eta > 0 and math.isfinite(self.eta)):
                raise ValueError(f"HMC needs eta > 0, got {self.eta}")
            if self.K is None or int(self.K) != self.K or self.K < 1:
                raise ValueError(f"HMC needs integer K >= 1, got {self.K}")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def mala(cls, h: float) -> "KernelSpec":
        return cls("mala", h=float(h))

    @classmethod
    def hmc(cls, eta: float, K: int) -> "KernelSpec":
        return cls("hmc", eta=float(eta), K=int(K))

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "KernelSpec":
        kind = cfg.get("kind")
        if kind == "mala":
            return cls.mala(cfg["h"])
        if kind == "hmc":
            return cls.hmc(cfg["eta"], cfg["K"])
        raise ValueError(f"unknown kernel kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "mala":
            return {"kind": "mala", "h": self.h}
        return {"kind": "hmc", "eta": self.eta, "K": self.K}

    @property
    def grad_evals_per_step(self) -> int:
        return 2 if self.kind == "mala" else self.K + 1

    @property
    def equivalent_h(self) -> float:
        """MALA step with the same one-step noise scale: h = eta^2 / 2 for HMC."""
        return self.h if self.kind == "mala" else 0.5 * self.eta**2


@dataclass
class LeapfrogPath:
    """Full leapfrog sub-iterates. ``xs``/``vs``/``grads`` have K+1 entries, ``v_half`` K."""

    xs: np.ndarray
    v_half: np.ndarray
    vs: np.ndarray
    grads: np.ndarray
    eta: float

    @property
    def K(self) -> int:
        return self.v_half.shape[0]

    @property
    def grad_evals(self) -> int:
        return self.K + 1


@dataclass
class TransitionRecord:
    x: np.ndarray
    noise: np.ndarray
    proposal: np.ndarray
    log_accept: np.ndarray | float
    accepted: np.ndarray | bool
    u: np.ndarray | float
    path: LeapfrogPath | None = None
    final_velocity: np.ndarray | None = None

    @property
    def next_state(self) -> np.ndarray:
        acc = np.asarray(self.accepted)
        return np.where(acc[..., None] if acc.ndim else acc, self.proposal, self.x)


def _accept(log_accept, u):
    # log u < min(0, a) reduces to log u < a because u < 1.
    return np.log(u) < log_accept


def _mala_propose(target: Target, x, g, h):
    gx = target.grad(x)
    y = x - h * gx + math.sqrt(2.0 * h) * g
    gy = target.grad(y)
    fwd = y - (x - h * gx)
    bwd = x - (y - h * gy)
    la = (target.potential(x) - target.potential(y)
          + (np.sum(fwd * fwd, axis=-1) - np.sum(bwd * bwd, axis=-1)) / (4.0 * h))
    return y, la


def leapfrog_trajectory(target: Target, x0, v0, eta: float, K: int) -> LeapfrogPath:
    """K leapfrog steps: half kick, drift, half kick."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v0, dtype=float)
    xs = np.empty((K + 1,) + x0.shape)
    vs = np.empty_like(xs)
    grads = np.empty_like(xs)
    v_half = np.empty((K,) + x0.shape)
    x = x0
    g = target.grad(x)
    xs[0], vs[0], grads[0] = x, v, g
    for k in range(K):
        vh = v - 0.5 * eta * g
        x = x + eta * vh
        g = target.grad(x)
        v = vh - 0.5 * eta * g
        v_half[k], xs[k + 1], vs[k + 1], grads[k + 1] = vh, x, v, g
    return LeapfrogPath(xs=xs, v_half=v_half, vs=vs, grads=grads, eta=eta)


def _leapfrog_end(target: Target, x, v, eta: float, K: int):
    g = target.grad(x)
    for _ in range(K):
        vh = v - 0.5 * eta * g
        x = x + eta * vh
        g = target.grad(x)
        v = vh - 0.5 * eta * g
    return x, v


def _hmc_propose(target: Target, x, v0, eta, K, store_path=False):
    if store_path:
        path = leapfrog_trajectory(target, x, v0, eta, K)
        xK, vK = path.xs[-1], path.vs[-1]
    else:
        path = None
        xK, vK = _leapfrog_end(target, x, v0, eta, K)
    H0 = target.potential(x) + 0.5 * np.sum(v0 * v0, axis=-1)
    HK = target.potential(xK) + 0.5 * np.sum(vK * vK, axis=-1)
    return xK, H0 - HK, path, vK


def propose(kernel: KernelSpec, target: Target, x, noise, store_path=False):
    """Deterministic proposal and log-acceptance given the noise draw.

    Returns ``(y, log_accept, path, final_velocity)``; the last two are None for MALA.
    """
    if kernel.kind == "mala":
        y, la = _mala_propose(target, x, noise, kernel.h)
        return y, la, None, None
    return _hmc_propose(target, x, noise, kernel.eta, kernel.K, store_path)


def _draw(rng: RandomStream, x, step, noise, u):
    x = np.asarray(x, dtype=float)
    if noise is None:
        noise = rng.normals(DrawKind.NOISE, step, x.size).reshape(x.shape)
    if u is None:
        n = 1 if x.ndim == 1 else x.shape[0]
        u = rng.uniforms(DrawKind.ACCEPT, step, n)[0]
        if x.ndim == 1:
            u = u[0]
    return x, np.asarray(noise, dtype=float), u


def mala_step(target: Target, x, h: float, rng: RandomStream | None = None, step: int = 0,
              noise=None, u=None) -> TransitionRecord:
    """One MALA transition: y = x - h grad f(x) + sqrt(2h) g, then a Metropolis filter.

    ``noise`` and ``u`` may be supplied to couple runs; otherwise they come
    from ``rng`` at ``step``.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    x, g, u = _draw(rng, x, step, noise, u)
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(step, detail="start state")
    y, la = _mala_propose(target, x, g, h)
    if not np.all(np.isfinite(la)):
        raise NonFiniteStateError(step, detail="MALA proposal")
    return TransitionRecord(x=x, noise=g, proposal=y, log_accept=la,
                            accepted=_accept(la, u), u=u)


def hmc_step(target: Target, x, eta: float, K: int, rng: RandomStream | None = None,
             step: int = 0, noise=None, u=None, store_path: bool = False) -> TransitionRecord:
    """One HMC transition with fresh velocity v0 ~ N(0, I) and K leapfrog steps."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    x, v0, u = _draw(rng, x, step, noise, u)
    y, la, path, vK = _hmc_propose(target, x, v0, eta, K, store_path)
    if not np.all(np.isfinite(la)):
        raise NonFiniteStateError(step, detail="HMC proposal")
    return TransitionRecord(x=x, noise=v0, proposal=y, log_accept=la,
                            accepted=_accept(la, u), u=u, path=path, final_velocity=vK)


@dataclass(frozen=True)
class RecordPolicy:
    """What a chain run keeps.

    ``store_states`` keeps every ``thin``-th state (the start is always kept);
    ``store_records`` keeps per-step TransitionRecords and is refused past
    ``max_record_elems`` stored floats per chain.
    """

    store_states: bool = True
    thin: int = 1
    store_records: bool = False
    store_paths: bool = False
    max_record_elems: int = 50_000_000

    def __post_init__(self):
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


@dataclass
class Trace:
    """One chain's history and running summaries."""

    kernel: KernelSpec
    x0: np.ndarray
    T: int
    final: np.ndarray
    states: list | None
    thin: int
    records: list | None
    accept_count: int
    accepted: np.ndarray
    log_accepts: np.ndarray
    norms_sq: np.ndarray
    mean: np.ndarray
    m2: np.ndarray
    witness_series: dict = field(default_factory=dict)
    probe_series: dict = field(default_factory=dict)
    grad_evals: int = 0

    def __len__(self):
        return self.T + 1

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.T if self.T else float("nan")

    @property
    def rejections(self) -> int:
        return self.T - self.accept_count

    @property
    def variance(self) -> np.ndarray:
        """Per-coordinate population variance over all T+1 visited states."""
        return self.m2 / (self.T + 1)

    @property
    def witness_hits(self) -> dict:
        return {k: int(v.sum()) for k, v in self.witness_series.items()}

    def recompute_from_records(self) -> dict:
        """Summaries rebuilt from stored records, for cross-checking the accumulators."""
        if self.records is None:
            raise ValueError("trace was run without records")
        xs = [self.x0] + [r.next_state for r in self.records]
        arr = np.array(xs)
        return {
            "accept_count": int(sum(bool(r.accepted) for r in self.records)),
            "mean": arr.mean(axis=0),
            "variance": arr.var(axis=0),
            "norms_sq": np.sum(arr * arr, axis=1),
            "final": arr[-1],
        }


def _block_steps(T: int, n: int, m: int) -> int:
    return max(1, min(T, _NOISE_BLOCK_ELEMS // max(1, n * m)))


def run_chains(kernel: KernelSpec, target: Target, x0, T: int,
               streams: Sequence[RandomStream], record_policy: RecordPolicy | None = None,
               witnesses: Mapping | None = None, threads: int = 1,
               probes: Mapping | None = None) -> list[Trace]:
    """Run ``len(streams)`` independent chains in lockstep.

    ``x0`` is either one start ``(d,)`` shared by all chains or ``(n, d)``.
    ``witnesses`` maps names to vectorized membership predicates evaluated on
    every visited state. ``probes`` maps names to callables
    ``(x, proposal, accepted, next_x) -> (n,)`` recorded once per step. With ``threads > 1`` chains are split across a thread
    pool; the output does not depend on the split.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    policy = record_policy or RecordPolicy()
    streams = list(streams)
    n = len(streams)
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        x0 = np.broadcast_to(x0, (n, x0.size)).copy()
    if x0.shape != (n, target.d):
        raise ValueError(f"x0 shape {x0.shape} does not match ({n}, {target.d})")
    if threads > 1 and n > 1:
        parts = np.array_split(np.arange(n), min(threads, n))
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            futs = [pool.submit(run_chains, kernel, target, x0[p], T,
                                [streams[i] for i in p], policy, witnesses, 1, probes)
                    for p in parts]
            out = []
            for f in futs:
                out.extend(f.result())
        return out
    return _run_lockstep(kernel, target, x0, T, streams, policy, dict(witnesses or {}),
                         dict(probes or {}))


def _run_lockstep(kernel, target, x0, T, streams, policy, witnesses, probes):
    n, d = x0.shape
    if policy.store_records:
        per_step = 4 * d + (4 * (kernel.K + 1) * d if policy.store_paths and kernel.kind == "hmc" else 0)
        if per_step * T > policy.max_record_elems:
            raise MemoryError(
                f"records would hold {per_step * T} floats per chain "
                f"(limit {policy.max_record_elems}); disable store_records or raise the limit"
            )
    x = x0.copy()
    accepted = np.zeros((n, T), dtype=bool)
    log_acc = np.empty((n, T))
    norms = np.empty((n, T + 1))
    norms[:, 0] = np.sum(x * x, axis=1)
    mean = x.copy()
    m2 = np.zeros_like(x)
    series = {k: np.empty((n, T + 1), dtype=bool) for k in witnesses}
    probe_vals = {k: np.empty((n, T)) for k in probes}
    for k, fn in witnesses.items():
        series[k][:, 0] = fn(x)
    states = [[x[i].copy()] for i in range(n)] if policy.store_states else None
    records = [[] for _ in range(n)] if policy.store_records else None

    B = _block_steps(T, n, d)
    for start in range(0, T, B):
        nb = min(B, T - start)
        noise = np.stack([s.normals(DrawKind.NOISE, start, d, nb) for s in streams], axis=1)
        unif = np.stack([s.uniforms(DrawKind.ACCEPT, start, 1, nb)[:, 0] for s in streams], axis=1)
        for b in range(nb):
            t = start + b
            y, la, path, vK = propose(kernel, target, x, noise[b], policy.store_paths)
            bad = ~np.isfinite(la)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise NonFiniteStateError(t, trial=streams[i].trial,
                                          detail=f"{kernel.kind} log-acceptance {la[i]}")
            acc = _accept(la, unif[b])
            if records is not None:
                for i in range(n):
                    p = None
                    if path is not None:
                        p = LeapfrogPath(xs=path.xs[:, i].copy(), v_half=path.v_half[:, i].copy(),
                                         vs=path.vs[:, i].copy(), grads=path.grads[:, i].copy(),
                                         eta=path.eta)
                    records[i].append(TransitionRecord(
                        x=x[i].copy(), noise=noise[b, i].copy(), proposal=y[i].copy(),
                        log_accept=float(la[i]), accepted=bool(acc[i]), u=float(unif[b, i]),
                        path=p, final_velocity=None if vK is None else vK[i].copy()))
            x_new = np.where(acc[:, None], y, x)
            for k, fn in probes.items():
                probe_vals[k][:, t] = fn(x, y, acc, x_new)
            x = x_new
            accepted[:, t] = acc
            log_acc[:, t] = la
            norms[:, t + 1] = np.sum(x * x, axis=1)
            # Welford update over visited states.
            delta = x - mean
            mean = mean + delta / (t + 2)
            m2 = m2 + delta * (x - mean)
            for k, fn in witnesses.items():
                series[k][:, t + 1] = fn(x)
            if states is not None and (t + 1) % policy.thin == 0:
                for i in range(n):
                    states[i].append(x[i].copy())

    traces = []
    for i in range(n):
        traces.append(Trace(
            kernel=kernel, x0=x0[i].copy(), T=T, final=x[i].copy(),
            states=None if states is None else states[i], thin=policy.thin,
            records=None if records is None else records[i],
            accept_count=int(accepted[i].sum()), accepted=accepted[i].copy(),
            log_accepts=log_acc[i].copy(), norms_sq=norms[i].copy(),
            mean=mean[i].copy(), m2=m2[i].copy(),
            witness_series={k: v[i].copy() for k, v in series.items()},
            probe_series={k: v[i].copy() for k, v in probe_vals.items()},
            grad_evals=T * kernel.grad_evals_per_step,
        ))
    return traces


def run_chain(kernel: KernelSpec, target: Target, x0, T: int, rng: RandomStream,
              record_policy: RecordPolicy | None = None, witnesses: Mapping | None = None,
              probes: Mapping | None = None) -> Trace:
    """Single chain; identical to the matching row of :func:`run_chains`."""
    return run_chains(kernel, target, np.asarray(x0, dtype=float), T, [rng],
                      record_policy, witnesses, probes=probes)[0]
