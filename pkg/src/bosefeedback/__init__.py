"""Linear stochastic model of a feedback-cooled Bose gas in a harmonic trap.

The package builds the coupled single-particle / center-of-mass SDEs,
propagates their moments exactly, simulates them by Monte Carlo, reduces the
center of mass to a colored noise seen by one particle and computes the
spectrum of that noise analytically and by Welch estimation.
"""

__version__ = "0.1.0"

from .params import (InvalidParameterError, ModelParams, DerivedParams, derive_params,
                     from_dimensionless, peaks_resolvable, stationary_width_prediction)
from .linear_model import (LinearSystem, GaussianMoments, NotHurwitzError, build_system,
                           ground_state_moments, macroscopic_block, propagate_moments,
                           stationary_covariance, transition)
from .sde import (MemoryCapError, SimConfig, TrajectoryEnsemble, simulate_ensemble, step_em,
                  step_exact, exact_step, rng_stream)
from .colored_noise import (KernelStateSpace, generate_xi_n, kernel_from_dimensionless,
                            kernel_state_space, sample_xi_n, simulate_reduced)
from .spectrum import (EstimatorError, SpectrumCurve, analytic_spectrum, estimate_from_kernel,
                       estimate_spectrum, find_extrema)
from .kernels import BACKEND
