"""MALA and leapfrog HMC on adversarial separable targets.

Exact acceptance and trajectory identities, plus estimators that exhibit
acceptance collapse, resonance traps, small spectral gaps and warm-start
mixing stalls at desk scale.
"""

from .chebyshev import (
    chebyshev_T,
    chebyshev_U,
    closed_form_hmc_map,
    eval_p,
    eval_q,
    hmc_alpha_beta,
    leapfrog_coeffs,
    resonant_lambda,
)
from .kernels import KernelSpec, RecordPolicy, hmc_step, leapfrog_trajectory, mala_step, run_chain, run_chains
from .rng import DrawKind, RandomStream
from .targets import (
    DomainError,
    Target,
    exact_sample_stationary,
    make_cosine_hard,
    make_hard_quadratic,
    make_hqc,
    make_isotropic_gaussian,
    make_resonant_gaussian,
)

__version__ = "0.1.0"
