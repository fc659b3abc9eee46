"""Actor-critic benchmark library.

Three interchangeable critic estimators (TD(0), GTD, A-GTD) drive a
policy-gradient actor on either an exact finite MDP or a continuous
obstacle-navigation task.  Exact oracles back every rate and bias test,
and hot loops run on a compiled backend with a numpy fallback.
"""

from ._kernels import BACKEND
from .actor_critic import (ActorConfig, RunTrace, actor_step,
                           batch_gradient_estimates, critic_effort,
                           grad_norm_proxy, gradient_estimate, k_epsilon,
                           run_generic, run_practical)
from .critic import CriticState, StepSchedule, critic_step, project_critic, q_value
from .env_core import (EnvModel, Trajectory, TransitionTuple, rollout,
                       sample_critic_tuple, sample_geometric_horizon)
from .errors import (ConfigurationError, FeatureRankError, InvariantViolation,
                     RunAborted)
from .features import RbfFeatureMap, TabularFeatureMap, grid_centers, rbf_kernel
from .harness import (ExperimentConfig, RateFit, critic_error_curves,
                      emit_plots, fit_rate, run_experiment)
from .nav_env import NavConfig, NavEnv, in_free_space, nav_reward, nav_step
from .oracle import (FiniteMdp, desk_features_3d, desk_features_onehot,
                     desk_mdp, exact_gradient, exact_q, load_finite_mdp,
                     min_eig_omega, objective, occupancy, rate_features,
                     rate_mdp, stationary_distribution, td_fixed_point,
                     uniform_policy)
from .policy import GaussianPolicy, TabularSoftmaxPolicy

__version__ = "0.1.0"

__all__ = [
    "ActorConfig", "BACKEND", "ConfigurationError", "CriticState",
    "EnvModel", "ExperimentConfig", "FeatureRankError", "FiniteMdp",
    "GaussianPolicy", "InvariantViolation", "NavConfig", "NavEnv",
    "RateFit", "RbfFeatureMap", "RunAborted", "RunTrace", "StepSchedule",
    "TabularFeatureMap", "TabularSoftmaxPolicy", "Trajectory",
    "TransitionTuple", "actor_step", "batch_gradient_estimates",
    "critic_effort", "critic_error_curves", "critic_step", "desk_features_3d",
    "desk_features_onehot", "desk_mdp", "emit_plots", "exact_gradient",
    "exact_q", "fit_rate", "grad_norm_proxy", "gradient_estimate",
    "grid_centers", "in_free_space", "k_epsilon", "load_finite_mdp",
    "min_eig_omega", "nav_reward", "nav_step", "objective", "occupancy",
    "project_critic", "q_value", "rate_features", "rate_mdp", "rbf_kernel",
    "rollout", "run_experiment", "run_generic", "run_practical",
    "sample_critic_tuple", "sample_geometric_horizon",
    "stationary_distribution", "td_fixed_point", "uniform_policy",
]
