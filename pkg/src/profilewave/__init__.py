"""Profile-based reconstruction of long-time wave fields from Fourier data."""
from .errors import ConfigurationError, DomainError, ResolutionError
from .spectral import (FourierField, Grid1D, GridD, default_profile_grid,
                       forward_transform_1, forward_transform_d,
                       inverse_transform_1, inverse_transform_d)
from .dispersion import (DispersionKind, DispersionSpec, eval_b,
                         exact_multiplier_phase, taylor_remainder)
from .stationary_phase import (HalfSphereTestFn, OscillatoryIntegralSpec, SphereQuadrature,
                               fresnel_oracle, make_test_function, min_theta_nodes,
                               oscillatory_integral, oscillatory_integral_substituted,
                               stationary_phase_functional)
from .operators import (ProfileFamily, Regularizer, ShellField, branch_factor, evolve,
                        profile_at, reconstruct, regularizer_eval, restrict,
                        restrict_regularized, shell)
from .initial_data import builtin, default_initial_data, load_tabulated
from .analysis import (ConvergenceReport, PolarEvalConfig, a_term, g_term, grid_fft_oracle,
                       limit_value, pointwise_convergence_study, polar_decomposition,
                       qhat_polar, reconstruction_benchmark, reference_solution,
                       convergence_target, weak_pairing_check)

__version__ = "0.1.0"
