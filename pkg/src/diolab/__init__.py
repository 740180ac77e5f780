"""Best Diophantine approximations of matrices and their limit statistics.

A library plus CLI that enumerates best approximations under the cuboid,
norm-cylinder and general block definitions, samples targets from Lebesgue,
fractal and curve measures, and reproduces the associated growth-rate and
distribution laws empirically at desk scale.
"""

__version__ = "0.1.0"

from .bestapprox import (BestApprox, EngineConfig, Theta, cf_convergents,
                         enumerate_best_general, error_of,
                         frontier_best_cuboid, oracle_best, proj_of,
                         scan_best_n1)
from .geometry import (ApproxSpace, Decomposition, NormSpec, ProductRegion,
                       c_constant, compute_epsilon, jt_volume, parse_space)
from .numerics import (Cmp, GuardedFloat, PrecisionExhausted, Rat,
                       RefinementExhausted, ValidatedReal, cmp_validated,
                       refine)
from .sampling import ThetaSource, refine_sample, sample

__all__ = [
    "ApproxSpace", "BestApprox", "Cmp", "Decomposition", "EngineConfig",
    "GuardedFloat", "NormSpec", "PrecisionExhausted", "ProductRegion", "Rat",
    "RefinementExhausted", "Theta", "ThetaSource", "ValidatedReal",
    "c_constant", "cf_convergents", "cmp_validated", "compute_epsilon",
    "enumerate_best_general", "error_of", "frontier_best_cuboid", "jt_volume",
    "oracle_best", "parse_space", "proj_of", "refine", "refine_sample",
    "sample", "scan_best_n1",
]
