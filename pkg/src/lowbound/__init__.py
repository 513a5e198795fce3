"""Resisting-oracle lower bounds for smooth convex minimization over l_p balls.

Submodules: ``space`` (norms, balls, LMO, projection), ``kernel`` (smoothing
kernels), ``smoothing`` (max-affine functions and their smoothed oracles),
``adversary`` (the resisting oracle), ``methods`` (CG, accelerated and
subgradient methods), ``reductions`` (p < 2 and Schatten embeddings),
``harness`` / ``persist`` / ``cli`` (experiments and files).
"""
from .adversary import (
    AdversaryConfig,
    AdversaryState,
    HardInstance,
    adversary_new,
    answer_query,
    finalize,
    lower_bound,
    replay_check,
    run_session,
)
from .exceptions import (
    BudgetExhausted,
    ChecksumMismatch,
    DimensionError,
    DistortionFailure,
    IncompleteRun,
    InvalidConfig,
    LowboundError,
    MalformedFile,
    NumericalFailure,
    TooSmallDimension,
    UnsupportedOperation,
    VersionMismatch,
)
from .harness import ExperimentConfig, Report, emit_plot_data, load_config, run_experiment
from .kernel import SmoothingKernel, hessian_quadform, make_kernel, phi_grad, phi_grad_invert, phi_value
from .methods import Method, MethodTrace, run_accelerated, run_cg, run_subgradient
from .persist import load_instance, serialize_instance
from .reductions import (
    LiftedInstance,
    LiftMap,
    lift_oracle,
    lower_bound_small_p,
    random_section,
    run_lifted_session,
    schatten_embed,
    schatten_norm,
)
from .smoothing import MaxAffine, OracleAnswer, SmoothedInstance, check_locality, check_membership, smooth_eval
from .space import Ball, NormSpec, dual_norm, lmo, norm, project

__version__ = "0.1.0"
