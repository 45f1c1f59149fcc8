"""Computable multiplier norms on the Hardy space H^1.

Modules: ``torus`` (polynomials on the circle), ``hankel`` (gamma_2 of
Hankel matrices), ``shiftmul`` (shift-maximal functionals), ``witness``
(separating multipliers and the scaling sweep), ``coeffs`` (coefficients of
power-bounded matrices) and ``cli``.
"""

from .coeffs import (
    md_certificate,
    md_eval,
    power_bound_certify,
    coeff_sequence,
    von_neumann_check,
)
from .hankel import (
    build_hankel,
    dyadic_upper,
    gamma2_sdp,
    injective_norm_bruteforce,
    l_norm_upper,
    x2_lower_sdp,
)
from .shiftmul import apply_multiplier, m3_lower_from_family, shift_maximal, shifted_multiplier
from .torus import (
    AnalyticPoly,
    MultiplierSeq,
    dirichlet_poly,
    eval_grid,
    lvp_kernel,
    norm_p,
    riesz_factor,
)
from .witness import bernstein_grid, build_witness, cq_estimate, separation_experiment

__version__ = "0.1.0"
