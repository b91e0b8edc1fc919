"""Average-reward temporal-difference policy evaluation.

Double-chain and single-chain TD learners, their exact projected-Bellman fixed
points, and the spectral quantities (condition numbers, contraction factor,
projection radii) that govern their convergence.
"""
from .chain import (MixingFit, PolicyMarkovChain, StationaryAnalysis, ValidationReport, analyze, make_ergodic,
                    mixing_fit, relative_value_function, stationary_distribution, validate_chain)
from .errors import AvgTDError, ParameterError, StructuralError
from .geometry import (FeatureMap, SpectralReport, contraction_factor, d_norm, d_projection, dirichlet_seminorm, eta1,
                       eta2, eta3, eta_prime, pi_projection, projection_radii, spectral_report)
from .sampling import TrajectorySampler, seed_split
from .solvers import EvalProblem, build_problem, expected_update_field, projected_bellman_residual, solve_theta_star
from .td import (DoubleChainState, RewardEstimator, SingleChainState, StepSchedule, baseline_coupled_sa_step,
                 double_chain_step, reward_estimate_update, single_chain_step, step_size)

__version__ = "0.1.0"
