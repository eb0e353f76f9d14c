"""
HMC trapped by resonance
========================

With eta = 1 and K = 2 the leapfrog map on an eigenvalue lam = 2 is minus
the identity, so that coordinate's magnitude never changes. Perturbing lam
by 0.1% breaks the trap.
"""

import numpy as np

from metrolb.chebyshev import eval_p, eval_q
from metrolb.kernels import KernelSpec, RecordPolicy, run_chains
from metrolb.rng import DrawKind, RandomStream
from metrolb.targets import (exact_sample_stationary, make_diagonal_quadratic,
                             make_resonant_gaussian)

target, j = make_resonant_gaussian(3, 100.0, 1.0, 2)
lam = target.quadratic_diag[1]
print(f"resonant eigenvalue lam = {lam} (j={j}); p_2 = {eval_p(2, lam)}, q_2 = {eval_q(2, lam)}")


def run(t, label):
    streams = [RandomStream(s) for s in range(10)]
    x0 = np.stack([exact_sample_stationary(t, 1, s.generator(DrawKind.START))[0] for s in streams])
    probe = {"mag": lambda x, y, a, xn: np.abs(xn[:, 1])}
    traces = run_chains(KernelSpec.hmc(1.0, 2), t, x0, 5000, streams,
                        RecordPolicy(store_states=False), probes=probe)
    drift = max(np.max(np.abs(tr.probe_series["mag"] - abs(x[1]))) for tr, x in zip(traces, x0))
    acc = np.mean([tr.acceptance_rate for tr in traces])
    print(f"{label}: max change in |x_2| over 5000 steps = {drift:.2e}, acceptance {acc:.4f}")


run(target, "exact resonance")
lams = target.quadratic_diag.copy()
lams[1] *= 1.001
run(make_diagonal_quadratic(lams), "lam x 1.001  ")
