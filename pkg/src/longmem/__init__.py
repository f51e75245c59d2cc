"""Moment estimation for AR(1) models with non-zero mean driven by long-memory Gaussian noise."""
from .errors import InsufficientDataError, LongmemError, NonEmbeddableError, ParameterDomainError
from .noise_models import CovarianceModel, NoiseKind, check_hypothesis, cov_arfima, cov_fgn, cov_sequence, spectral_constant
from .gaussian_sim import Series, SeedSpec, derive_seed, sample_stationary_gaussian, simulate_ar1
from .moment_map import EPS, MomentMap, VarianceConstants, c_theta_H_cov, c_theta_H_spec, l_infty, sigma_1_sq

__version__ = "0.1.0"
