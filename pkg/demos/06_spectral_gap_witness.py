"""
Step size limits the spectral gap
=================================

For g(x) = x_1 on the hard quadratic, the Dirichlet ratio E(g, g)/Var(g)
of one MALA step is at most of order h, and of order h K^2 for K-step HMC
in the stable regime, so the relaxation time grows like 1/h.
"""

import math

from metrolb import estimators as est
from metrolb.kernels import KernelSpec
from metrolb.rng import RandomStream
from metrolb.targets import make_hard_quadratic

d, kappa, n = 20, 100.0, 100_000
target = make_hard_quadratic(d, kappa)
root = RandomStream(6)

print(f"{'kernel':>22} {'ratio':>11} {'se':>9} {'bound':>10}")
for i, h in enumerate((1e-4, 1e-3, 1e-2)):
    g = est.dirichlet_gap_estimate(KernelSpec.mala(h), target, n, root.spawn(i))
    print(f"{'MALA h=%g' % h:>22} {g.ratio:11.3e} {g.ratio_se:9.1e} {10 * (h + h * h):10.3e}")
for i, K in enumerate((2, 4, 8)):
    eta = 0.5 / (math.sqrt(kappa) * K)
    h = eta**2 / 2
    g = est.dirichlet_gap_estimate(KernelSpec.hmc(eta, K), target, n, root.spawn(10 + i))
    print(f"{'HMC K=%d eta=%.4f' % (K, eta):>22} {g.ratio:11.3e} {g.ratio_se:9.1e} "
          f"{10 * (h * K * K + h * h * K**4):10.3e}")
