"""
Leapfrog on a quadratic is a Chebyshev polynomial
=================================================

K leapfrog steps with step eta on f(x) = lam x^2 / 2 map (x0, v0) to
p_K(z) x0 + eta q_K(z) v0 with z = eta^2 lam, where p_K(z) = T_K(1 - z/2)
and q_K(z) = U_{K-1}(1 - z/2).
"""

import math

import numpy as np

from metrolb import chebyshev as cheb
from metrolb.kernels import leapfrog_trajectory
from metrolb.targets import make_diagonal_quadratic

# Coefficients of p_2 and q_2 in powers of z
c = cheb.leapfrog_coeffs(2)
print("p_2 coefficients:", c.D, " q_2 coefficients:", c.E)

# Simulate and compare with the polynomial map
lam, eta, K = 3.0, 0.4, 6
z = eta**2 * lam
path = leapfrog_trajectory(make_diagonal_quadratic([lam]), [1.0], [0.5], eta, K)
closed = cheb.closed_form_hmc_map(lam, eta, K, 1.0, 0.5)
print(f"simulated x_K = {path.xs[-1, 0]:.15f}, polynomial = {closed:.15f}")

# Recurrence against the trigonometric form over z in [0, 6]
zs = np.linspace(0, 6, 1000)
worst = max(np.max(np.abs(cheb.eval_p(k, zs) - cheb.chebyshev_T(k, 1 - zs / 2))
                   / np.maximum(1, np.abs(cheb.chebyshev_T(k, 1 - zs / 2)))) for k in range(1, 65))
print(f"max relative error of p_K against T_K for K <= 64: {worst:.2e}")

# Resonances: q_K vanishes and |p_K| = 1, so the map is +-identity
K = 5
for j in range(1, K):
    zj = 2 * (1 - math.cos(j * math.pi / K))
    print(f"K={K} j={j}: z={zj:.4f}  p={cheb.eval_p(K, zj):+.12f}  q={cheb.eval_q(K, zj):+.1e}")
