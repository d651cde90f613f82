"""Pseudo-spectral laboratory for 2D viscous rotating shallow water with capillarity."""

__version__ = "0.1.0"

from .besov import HybridIndex, besov_norm, cl_norm, es_norm, hybrid_norm  # noqa: E402
from .energy import (  # noqa: E402
    EnergyWeights,
    admissible_K,
    alpha_k_energy,
    default_weights,
    fit_decay_rate,
    theta_k_energy,
    weight_V,
)
from .integrator import BlowUpError, Propagator, StepControl, integrate, linear_step, step  # noqa: E402
from .model import SweParams, SweState, full_rhs, linear_symbol, nonlinear_terms, zeta  # noqa: E402
from .spectral import (  # noqa: E402
    PSI_PROFILE_ID,
    Grid,
    SpectralField,
    build_grid,
    dyadic_block,
    eval_cutoffs,
    friedrichs_project,
    hodge_assemble,
    hodge_split,
    lambda_pow,
    partition_residual,
)
from .trajectory import Trajectory  # noqa: E402

__all__ = [
    "__version__",
    "PSI_PROFILE_ID",
    "Grid",
    "SpectralField",
    "build_grid",
    "eval_cutoffs",
    "dyadic_block",
    "partition_residual",
    "friedrichs_project",
    "lambda_pow",
    "hodge_split",
    "hodge_assemble",
    "HybridIndex",
    "besov_norm",
    "hybrid_norm",
    "cl_norm",
    "es_norm",
    "SweParams",
    "SweState",
    "zeta",
    "linear_symbol",
    "nonlinear_terms",
    "full_rhs",
    "Propagator",
    "StepControl",
    "BlowUpError",
    "linear_step",
    "step",
    "integrate",
    "Trajectory",
    "EnergyWeights",
    "admissible_K",
    "default_weights",
    "alpha_k_energy",
    "theta_k_energy",
    "fit_decay_rate",
    "weight_V",
]
