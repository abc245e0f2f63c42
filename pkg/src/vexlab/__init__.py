"""Weighted variable-exponent eigenvalue problems on box grids."""

from .ckn import ckn_classical_check, ckn_variable_ratio, estimate_beta_ckn, replicate_ckn
from .config import ConfigError, RunConfig, build_instance, load_config, parse_config
from .eigen import (
    EigenResult,
    GeometryCertificate,
    NoNegativeDirection,
    SolverOptions,
    check_boundary_bound,
    compute_lambda0,
    e1_norm,
    eigen_residual,
    estimate_beta,
    find_negative_direction,
    minimize_in_ball,
)
from .energy import EnergyContext, dual_norm, eval_I, eval_T, grad_I, grad_T, monotonicity_gap, simon_check
from .expr import ExprError, FieldExpression, eval_on_grid, grad_on_grid, parse
from .grid import Grid, build_grid, discrete_gradient, integrate
from .spaces import ConvergenceError, ExponentField, check_trichotomy, holder_pairing, luxemburg_norm, modular
from .weights import SingularSpec, WeightFields, build_weights, validate_A, validate_P, validate_Q

__version__ = "0.1.0"
