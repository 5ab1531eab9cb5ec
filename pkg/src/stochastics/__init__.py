"""
Seedable random-variate primitives and positive-definite matrix utilities
shared by every Gibbs block.
"""

from .rng import RngStream
from .psd import PsdMatrix, batched_cholesky, cholesky, inverse_pd, symmetrize
from .samplers import (
    sample_beta,
    sample_categorical,
    sample_categorical_log,
    sample_dirichlet,
    sample_gamma,
    sample_inverse_wishart,
    sample_mvn,
    sample_mvn_batch,
    sample_mvn_precision,
    sample_mvn_precision_batch,
)

__all__ = [
    "RngStream",
    "PsdMatrix",
    "cholesky",
    "batched_cholesky",
    "inverse_pd",
    "symmetrize",
    "sample_beta",
    "sample_categorical",
    "sample_categorical_log",
    "sample_dirichlet",
    "sample_gamma",
    "sample_inverse_wishart",
    "sample_mvn",
    "sample_mvn_batch",
    "sample_mvn_precision",
    "sample_mvn_precision_batch",
]
