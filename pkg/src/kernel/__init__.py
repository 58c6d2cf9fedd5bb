"""
Numerical kernel layer.

- gp_core: SE kernel, exact posterior, incremental updates, prior sampling
- sparse_gp: SoD, PITC and FITC through the support set
- online_sparse_gp: streaming GP with constant per-step cost
- linalg: jittered Cholesky shared by every SPD solve
"""

from src.kernel.errors import (
    BufferProtocolError,
    ConfigError,
    DegenerateBeliefError,
    FieldFormatError,
    GPLocalizeError,
    IllConditionedError,
    InvalidArgumentError,
)
from src.kernel.gp_core import (
    Dataset,
    GaussianPredictive,
    Hyperparams,
    PosteriorCache,
    cov_matrix,
    covariance,
    gaussian_logpdf,
    gp_posterior,
    gp_posterior_batch,
    gp_posterior_incremental,
    sample_gp_prior,
)
from src.kernel.online_sparse_gp import OnlineGPState, SliceSummary
from src.kernel.sparse_gp import (
    BlockedDataset,
    SupportSet,
    fitc_posterior,
    pitc_posterior,
    sod_posterior,
)

__all__ = [
    # Errors
    "GPLocalizeError",
    "InvalidArgumentError",
    "IllConditionedError",
    "BufferProtocolError",
    "DegenerateBeliefError",
    "ConfigError",
    "FieldFormatError",
    # Full GP
    "Hyperparams",
    "GaussianPredictive",
    "Dataset",
    "PosteriorCache",
    "covariance",
    "cov_matrix",
    "gp_posterior",
    "gp_posterior_batch",
    "gp_posterior_incremental",
    "gaussian_logpdf",
    "sample_gp_prior",
    # Sparse GP
    "SupportSet",
    "BlockedDataset",
    "sod_posterior",
    "pitc_posterior",
    "fitc_posterior",
    # Online sparse GP
    "SliceSummary",
    "OnlineGPState",
]
