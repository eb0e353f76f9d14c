"""
MALA acceptance collapse on an ill-conditioned Gaussian
=======================================================

On f(x) = x_1^2/2 + (kappa/2)|x_{2..d}|^2, starting from a set where the
stiff coordinates are slightly compressed, the mean log-acceptance falls
fast as h grows past sqrt(log d) / (kappa sqrt d).
"""

import math

from metrolb import analysis
from metrolb import estimators as est
from metrolb.kernels import KernelSpec
from metrolb.rng import RandomStream
from metrolb.targets import make_hard_quadratic

d, kappa = 200, 50.0
target = make_hard_quadratic(d, kappa)
bad = est.make_witness("gaussian_bad", d, kappa=kappa)
print(f"stationary measure of the start set: {est.set_measure_mc(target, bad, 0, RandomStream(0)).estimate:.3e}")

unit = math.sqrt(math.log(d)) / (kappa * math.sqrt(d))
grid = [KernelSpec.mala(c * unit) for c in (0.25, 0.5, 1, 2, 4)]
rows = est.acceptance_scan(target, grid, bad, 5000, RandomStream(1))
print(f"{'h':>10} {'mean log a':>12} {'accept':>8} {'escape':>8}")
for r in rows:
    print(f"{r['h']:10.2e} {r['mean_log_accept']:12.3f} {r['accept_rate']:8.4f} {r['escape_rate']:8.4f}")

# Closed-form expectation from the origin at the largest step
h = rows[-1]["h"]
lam = target.quadratic_diag
a, b = analysis.mala_alpha_beta(h, lam)
print("expected log-accept from x = 0:", analysis.expected_quadratic_log_accept(lam, 0 * lam, a, b, h))
