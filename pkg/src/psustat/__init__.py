"""Numerical toolkit for stationary measures of PSU(1,1) random walks on the circle."""

__version__ = "0.1.0"

from .errors import (AccuracyError, ConfigurationError, DomainError, EvaluationError,
                     GeometryError, PreconditionError, PsuStatError, ResourceError)
from .moebius import (INF, MoebiusMap, apply, busemann, classify, compose, derivative,
                      distance_to_origin, half_log_derivative_pole, hyperbolic_norm, inverse,
                      pole, pole_image)
from .group import GeneratorSet, enumerate_ball, preset
from .gmeasure import GroupMeasure, blaschke_sum, convolution_power, convolve, first_moment
from .cmeasure import (AtomicMeasure, FourierCoeffs, FourierMeasure, GridMeasure, fourier_coeffs,
                       lebesgue, markov_step, point_mass, pushforward, stationary_iterate)
from .transforms import (aleksandrov_statistic, blaschke_product, borel_series, boundary_gap,
                         cauchy_transform, hardy_norm, log_poisson, taylor_recover)
from .stationarity import (borel_norm_growth, contour_charge, drift, functional_residual,
                           poisson_stationarity_check, residual_report, stolz_coverage,
                           t_mu_adjoint_matrix, t_mu_matrix)
from .walk import (WalkConfig, empirical_escape_rate, empirical_hitting_measure, hitting_sample,
                   sample_path)
