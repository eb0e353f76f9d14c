"""
A warm start that never moves
=============================

MALA on a standard Gaussian with h = 0.5 log d / (kappa d), started inside
the small ball |x|^2 <= d/2: the filter almost never rejects, yet |x|^2
creeps up so slowly that the chain stays far from the typical shell.
"""

import math

import numpy as np

from metrolb import estimators as est
from metrolb.kernels import KernelSpec, RecordPolicy, run_chains
from metrolb.rng import DrawKind, RandomStream
from metrolb.targets import make_isotropic_gaussian

d, kappa, T, trials = 1000, 100.0, 2000, 50
h = 0.5 * math.log(d) / (kappa * d)
target = make_isotropic_gaussian(d)
ball = est.make_witness("small_ball", d)
large = est.make_witness("omega_large", d)

streams = [RandomStream(4, i) for i in range(trials)]
x0 = np.stack([est.sample_restricted(target, ball, 1, s.generator(DrawKind.START))[0] for s in streams])
traces = run_chains(KernelSpec.mala(h), target, x0, T, streams, RecordPolicy(store_states=False))

norms = np.array([t.norms_sq for t in traces]) / d
print(f"h = {h:.3e}; mean |x|^2/d at t=0: {norms[:, 0].mean():.3f}, at t={T}: {norms[:, -1].mean():.3f}")
print(f"trials with zero rejections: {sum(t.rejections == 0 for t in traces)}/{trials}")
stat = est.set_measure_mc(target, large, 0, RandomStream(0))
print(f"stationary mass of |x|^2 >= 0.81 d: {stat.estimate:.6f}")
print(f"TV lower bound at T={T}: {est.tv_witness_gap(np.array([t.final for t in traces]), stat, large):.3f}")

# The small-ball probability decays exponentially in d
for n in (50, 100, 200, 400):
    r = est.small_ball_log_rate(n)
    print(f"n={n}: log P / n = {r['rate']:.4f} (limit {r['ld_limit']:.4f})")
