"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Each test records a one-line verdict; ``conftest.py`` prints them at the end
of the run. ``python tests/test_acceptance.py`` runs them standalone.
"""

import math
import time

import numpy as np
import pytest

from metrolb import analysis as an
from metrolb import chebyshev as cheb
from metrolb import estimators as est
from metrolb.identities import run_identity_suite
from metrolb.kernels import KernelSpec, RecordPolicy, leapfrog_trajectory, run_chains
from metrolb.rng import DrawKind, RandomStream
from metrolb.targets import (
    CoordinateSpec,
    coordinate_functions,
    make_cosine_hard,
    make_diagonal_quadratic,
    make_hard_quadratic,
    make_isotropic_gaussian,
    make_resonant_gaussian,
)

VERDICTS = {}


def _record(n, name, ok, detail):
    VERDICTS[n] = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"


def _tv_from_counts(hits, n, stat):
    chain = est.MeasureEstimate.from_counts(hits, n)
    return max(0.0, stat.ci_lo - chain.ci_hi, chain.ci_lo - stat.ci_hi)


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_chebyshev_identities():
    z = np.linspace(0.0, 6.0, 1000)
    w = 1.0 - z / 2.0
    worst = 0.0
    with _Timer() as tm:
        for K in range(1, 65):
            T = cheb.chebyshev_T(K, w)
            U = cheb.chebyshev_U(K - 1, w)
            ep = np.abs(cheb.eval_p(K, z) - T) / np.maximum(1.0, np.abs(T))
            eq = np.abs(cheb.eval_q(K, z) - U) / np.maximum(1.0, np.abs(U))
            worst = max(worst, float(ep.max()), float(eq.max()))
    ok = worst <= 1e-8 and tm.elapsed < 5.0
    _record(1, "Chebyshev identities", ok, f"max rel err {worst:.2e} (tol 1e-8), {tm.elapsed:.2f}s (< 5s)")
    assert worst <= 1e-8
    assert tm.elapsed < 5.0


def test_criterion_02_leapfrog_polynomial():
    gen = np.random.default_rng(2)
    worst = 0.0
    with _Timer() as tm:
        for _ in range(1000):
            lam = float(np.exp(gen.uniform(math.log(1e-2), math.log(1e2))))
            zz = float(gen.uniform(0.0, 6.0))
            eta = math.sqrt(zz / lam)
            K = int(gen.integers(1, 33))
            x0, v0 = gen.standard_normal(2)
            sim = leapfrog_trajectory(make_diagonal_quadratic([lam]), [x0], [v0], eta, K).xs[-1, 0]
            p, q = cheb.eval_p(K, eta * eta * lam), cheb.eval_q(K, eta * eta * lam)
            ref = p * x0 + eta * q * v0
            worst = max(worst, abs(sim - ref) / (abs(p * x0) + abs(eta * q * v0)))
    ok = worst <= 1e-9 and tm.elapsed < 5.0
    _record(2, "leapfrog polynomial map", ok, f"max rel err {worst:.2e} (tol 1e-9), {tm.elapsed:.2f}s (< 5s)")
    assert worst <= 1e-9
    assert tm.elapsed < 5.0


ACCEPT_IDENTITIES = [
    "mala_accept_quadratic_form",
    "mala_accept_gradient_form",
    "mala_accept_decomposition",
    "hmc_energy_telescoped_quadratic",
    "hmc_energy_telescoped_cosine",
    "hmc_energy_quadratic_closed_form",
]


def test_criterion_03_acceptance_identities():
    with _Timer() as tm:
        results = run_identity_suite(n_fuzz=1000, only=ACCEPT_IDENTITIES)
    assert {r.name for r in results} == set(ACCEPT_IDENTITIES)
    worst = max(r.max_error for r in results)
    cases = min(r.cases for r in results)
    ok = worst <= 1e-9 and cases >= 1000 and tm.elapsed < 10.0
    _record(3, "acceptance identities", ok,
            f"{len(results)} identities, max rel err {worst:.2e} (tol 1e-9), >= {cases} cases each, "
            f"{tm.elapsed:.2f}s (< 10s)")
    assert all(r.tolerance <= 1e-9 for r in results)
    assert worst <= 1e-9
    assert cases >= 1000
    assert tm.elapsed < 10.0


def test_criterion_04_resonance_trap():
    with _Timer() as tm:
        target, j = make_resonant_gaussian(3, 100.0, 1.0, 2)
        assert j == 1 and math.isclose(target.quadratic_diag[1], 2.0, rel_tol=1e-15)
        sd = 1.0 / math.sqrt(2.0)
        slab = est.make_witness("slab", 3, coord=1, half_width=0.3 * sd)
        streams = [RandomStream(seed) for seed in range(20)]
        x0 = np.stack([est.sample_restricted(target, slab, 1, s.generator(DrawKind.START))[0]
                       for s in streams])
        probes = {
            "mag": lambda x, y, a, xn: np.abs(xn[:, 1]),
            "prop": lambda x, y, a, xn: np.abs(np.abs(y[:, 1]) - np.abs(x[:, 1])),
        }
        traces = run_chains(KernelSpec.hmc(1.0, 2), target, x0, 10_000, streams,
                            RecordPolicy(store_states=False), witnesses={"slab": slab.contains},
                            probes=probes)
        base = np.abs(x0[:, 1])
        mags = np.array([t.probe_series["mag"] for t in traces])
        drift = max(float(np.max(np.abs(mags - base[:, None]))),
                    float(max(t.probe_series["prop"].max() for t in traces)))
        stat = est.set_measure_mc(target, slab, 0, RandomStream(0))
        hits = np.array([t.witness_series["slab"] for t in traces]).sum(axis=0)
        # the slab hit count at each step is all the TV bound needs
        tv_min = min(_tv_from_counts(int(k), 20, stat) for k in np.unique(hits))
    ok = drift <= 1e-9 and tv_min >= 0.3 and tm.elapsed < 10.0
    _record(4, "resonance trap", ok,
            f"max |x_res| drift {drift:.1e} (tol 1e-9), min tv_lb {tv_min:.3f} (>= 0.3), "
            f"{tm.elapsed:.2f}s (< 10s)")
    assert drift <= 1e-9
    assert tv_min >= 0.3
    assert tm.elapsed < 10.0


def test_criterion_05_gaussian_bad_set_collapse():
    d, kappa = 200, 50.0
    unit = math.sqrt(math.log(d)) / (kappa * math.sqrt(d))
    cs = (0.5, 1.0, 2.0, 4.0)
    with _Timer() as tm:
        target = make_hard_quadratic(d, kappa)
        wset = est.make_witness("gaussian_bad", d, kappa=kappa)
        rows = est.acceptance_scan(target, [KernelSpec.mala(c * unit) for c in cs], wset, 10_000,
                                   RandomStream(5))
    means = [r["mean_log_accept"] for r in rows]
    last = rows[-1]
    monotone = all(a > b for a, b in zip(means, means[1:]))
    ok = (last["mean_log_accept"] <= -10 and last["accept_rate"] <= 1e-3 and monotone
          and tm.elapsed < 30.0)
    _record(5, "Gaussian bad-set collapse", ok,
            f"mean log-accept {last['mean_log_accept']:.2f} (<= -10), accept freq "
            f"{last['accept_rate']:.1e} (<= 1e-3), monotone over h {['%.2f' % m for m in means]}, "
            f"{tm.elapsed:.2f}s (< 30s)")
    assert last["mean_log_accept"] <= -10
    assert last["accept_rate"] <= 1e-3
    assert monotone
    assert tm.elapsed < 30.0


COSINE_POINTS = [
    (3.0, 1.0, 0.0),
    (10.0, 0.1, 0.0),
    (30.0, 0.01, 2 * math.pi * 0.1),
    (50.0, 0.02, 0.05 * math.sqrt(0.02)),
    (100.0, 1e-3, -2 * math.pi * math.sqrt(1e-3)),
    (100.0, 7e-4, 0.2 * math.sqrt(7e-4)),
    (20.0, 0.05, math.pi * math.sqrt(0.05)),
    (200.0, 1e-4, 0.5 * math.pi * math.sqrt(1e-4)),
    (5.0, 0.5, 1.0),
    (80.0, 3e-3, 0.3),
]


def test_criterion_06_cosine_drift_expectation():
    n, chunk = 10_000_000, 1_000_000
    worst_z = 0.0
    coef_ok = True
    with _Timer() as tm:
        for i, (kappa, h, x) in enumerate(COSINE_POINTS):
            spec = CoordinateSpec("cosine", kappa=kappa, h=h)
            f, df, _ = coordinate_functions(spec)
            fx, dfx = f(x), df(x)
            rs = RandomStream(6, i)
            s1 = s2 = 0.0
            for step in range(n // chunk):
                g = rs.normals(DrawKind.AUX, step, chunk)[0]
                xg = x + math.sqrt(2 * h) * g
                S = -f(xg) + fx - 0.5 * (x - xg) * (dfx + df(xg))
                s1 += float(S.sum())
                s2 += float((S * S).sum())
            mean = s1 / n
            se = math.sqrt(max(s2 / n - mean * mean, 0.0) / n)
            ref = float(an.cosine_drift_expectation(kappa, h, x))
            worst_z = max(worst_z, abs(mean - ref) / se)
            if math.cos(x / math.sqrt(h)) >= 0.95:
                coef_ok &= abs(ref) >= 0.08 * h * kappa
    ok = worst_z <= 4.0 and coef_ok and tm.elapsed < 60.0
    _record(6, "cosine drift expectation", ok,
            f"worst |z| {worst_z:.2f} over {len(COSINE_POINTS)} points (<= 4), coefficient floor "
            f"{'holds' if coef_ok else 'violated'}, {tm.elapsed:.2f}s (< 60s)")
    assert worst_z <= 4.0
    assert coef_ok
    assert tm.elapsed < 60.0


def test_criterion_07_cosine_collapse_at_scale():
    d, kappa, h = 100_000, 100.0, 7e-4
    assert math.log(d) / (kappa * d) < h < 1 / (kappa * math.log(d))
    with _Timer() as tm:
        target = make_cosine_hard(d, kappa, h)
        wset = est.make_witness("omega_hard", d, kappa=kappa, h=h)
        rs = RandomStream(7)
        starts = est.sample_restricted(target, wset, 200, rs.generator(DrawKind.START))
        st = est.one_step_stats(KernelSpec.mala(h), target, starts, rs, chunk=20)
    thresh = -0.04 * h * kappa * d
    ok = st.mean_log_accept <= thresh and tm.elapsed < 120.0
    _record(7, "cosine-target collapse at d=1e5", ok,
            f"mean log-accept {st.mean_log_accept:.1f} (<= {thresh:.0f}), {tm.elapsed:.2f}s (< 120s)")
    assert st.mean_log_accept <= thresh
    assert tm.elapsed < 120.0


def test_criterion_08_warm_start_stall():
    d, kappa, T, trials = 1000, 100.0, 2000, 100
    h = 0.5 * math.log(d) / (kappa * d)
    with _Timer() as tm:
        target = make_isotropic_gaussian(d)
        ball = est.make_witness("small_ball", d)
        large = est.make_witness("omega_large", d)
        streams = [RandomStream(8, i) for i in range(trials)]
        x0 = np.stack([est.sample_restricted(target, ball, 1, s.generator(DrawKind.START))[0]
                       for s in streams])
        traces = run_chains(KernelSpec.mala(h), target, x0, T, streams, RecordPolicy(store_states=False))
        stalled = np.array([t.rejections == 0 and t.norms_sq.max() <= 0.81 * d for t in traces])
        finals = np.array([t.final for t in traces])
        stat = est.set_measure_mc(target, large, 0, RandomStream(0))
        tv = est.tv_witness_gap(finals, stat, large)
    frac = float(stalled.mean())
    ok = frac >= 0.95 and tv >= 0.4 and tm.elapsed < 60.0
    _record(8, "warm-start mixing stall", ok,
            f"stalled fraction {frac:.2f} (>= 0.95), tv_lb {tv:.3f} at T={T} (>= 0.4), "
            f"{tm.elapsed:.2f}s (< 60s)")
    assert frac >= 0.95
    assert tv >= 0.4
    assert tm.elapsed < 60.0


def test_criterion_09_spectral_gap_bounds():
    d, kappa, n = 20, 100.0, 100_000
    target = make_hard_quadratic(d, kappa)
    root = RandomStream(9)
    lines = []
    worst = -math.inf
    with _Timer() as tm:
        cases = [(KernelSpec.mala(h), 10 * (h + h * h)) for h in (1e-4, 1e-3, 1e-2)]
        for K in (2, 4, 8):
            eta = 0.5 / (math.sqrt(kappa) * K)
            h = eta * eta / 2
            assert 2 * h * kappa * K * K <= 1
            cases.append((KernelSpec.hmc(eta, K), 10 * (h * K * K + h * h * K**4)))
        for i, (kern, bound) in enumerate(cases):
            g = est.dirichlet_gap_estimate(kern, target, n, root.spawn(i), coord=0)
            worst = max(worst, (g.ratio + 4 * g.ratio_se) / bound)
            lines.append(f"{kern.kind}:{g.ratio:.2e}/{bound:.2e}")
    ok = worst <= 1.0 and tm.elapsed < 60.0
    _record(9, "spectral-gap witness bounds", ok,
            f"max (ratio + 4se)/bound {worst:.3f} (<= 1) [{', '.join(lines)}], {tm.elapsed:.2f}s (< 60s)")
    assert worst <= 1.0
    assert tm.elapsed < 60.0


def test_criterion_10_hmc_drift_coefficient():
    with _Timer() as tm:
        vals = [an.hmc_cosine_drift_coeff(K) for K in range(1, 65)]
    c1_err = abs(vals[0] - (1 - 2 / math.e))
    ok = min(vals) >= 0.129 and c1_err <= 1e-12 and tm.elapsed < 1.0
    _record(10, "HMC drift coefficient", ok,
            f"min c_K {min(vals):.4f} (>= 0.129), |c_1 - (1 - 2/e)| {c1_err:.1e} (<= 1e-12), "
            f"{tm.elapsed * 1e3:.1f}ms (< 1s)")
    assert min(vals) >= 0.129
    assert c1_err <= 1e-12
    assert tm.elapsed < 1.0


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    for k in sorted(VERDICTS):
        print(VERDICTS[k])
    sys.exit(1 if failed else 0)
