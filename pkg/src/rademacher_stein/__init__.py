"""Discrete Malliavin-Stein calculus for Rademacher functionals."""
__version__ = "0.1.0"

from .chaos import (
    ChaosDecomposition,
    RademacherPoint,
    decompose_hoeffding,
    decompose_walsh,
    evaluate,
    first_chaos,
    multiply,
    product,
    to_table,
    variance,
)
from .contraction import check_estimates, contraction_norms, star, trace_power4
from .engine import Estimate, distance, enumerate_expectation, gaussian_expectation, mc_distance, mc_estimate
from .kernel import GeneralKernel, SymmetricKernel, make_symmetric_kernel, sq_norm, symmetrize
from .malliavin import (
    apply_L,
    apply_L_inverse,
    apply_Pt,
    chain_rule_residual,
    divergence,
    exchangeable_drift_check,
    gradient,
    mehler_evaluate,
)
from .sparse import Cover, SparseIndexSet, fractional_product, multilinear_kernel, scaling_table
from .stein import (
    SteinBound,
    WeightSequence,
    bound_average,
    bound_double_integral,
    bound_fixed_chaos,
    bound_general,
    bound_single_plus_double,
    bound_sparse_stats,
    bound_two_runs,
    wasserstein_bound,
)
from .testfunctions import TestFunction, cosine, parse_test_function

__all__ = [name for name in dir() if not name.startswith("_")]
