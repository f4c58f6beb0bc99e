"""Ising models with sparse + low-rank interactions: exact likelihood
machinery, samplers, a regularised estimator with optimality certificates,
tangent-space diagnostics and a maximum-entropy duality checker."""

from .exceptions import ConfigError, DimensionError, EnumerationCapError, SingularMatrixError
from .ising import (
    BinaryDataset,
    IsingModel,
    empirical_second_moment,
    expected_second_moment,
    hessian_vector_product,
    log_partition,
    neg_log_likelihood,
    nll_gradient,
)
from .latent import LatentCGModel, marginal_interaction, sample_full
from .sampling import GibbsConfig, exact_sample, gibbs_sample
from .solver import SolverConfig, SparseLowRankPair, solve_path, solve_slr, verify_kkt

__version__ = "0.1.0"
