"""Scenario-reweighting engine: views in, minimum-entropy posterior out.

The workflow: hold a panel of joint risk-factor scenarios fixed, compile
market views into linear constraints on the scenario probabilities, find the
probabilities closest (in relative entropy) to the prior that satisfy them,
blend by confidence, and drive every downstream statistic and the option
frontier off the reweighted scenarios without repricing anything.
"""

from ._kernels import USING_NUMBA
from .constraints import ConstraintBuilder, LinearConstraintSet, normalization_only
from .expressions import ExpressionError, evaluate_expression, evaluate_view_columns
from .normal import (NormalMixture, NormalModel, NormalViewSpec,
                     NotPositiveDefiniteError, discretize, kl_normals,
                     mixture_posterior, normal_posterior, normal_view_constraints)
from .options import (BootstrapConfig, ButterflyContract, FrontierPoint,
                      FrontierSpec, PricePanel, PricingError, bs_price,
                      build_pnl_panel, contract_delta, current_price,
                      kernel_bootstrap, mean_cvar_frontier, smile_vol,
                      zero_delta_budget_constraints)
from .pooling import (ConfidenceSpec, PowerSetAllocation, UserConfidence,
                      pool_multi, pool_two, posterior_from_power_set,
                      power_set_allocation, skill_confidence)
from .scenarios import (PanelFormatError, ProbabilityVector, ScenarioPanel,
                        ViewPanel, WeightedStatistics, column_statistics,
                        empirical_copula_ranks, load_panel_csv,
                        load_probabilities, save_panel_csv, save_probabilities,
                        weighted_correlation, weighted_correlation_matrix,
                        weighted_cvar, weighted_mean, weighted_median,
                        weighted_quantile, weighted_std)
from .solver import (InfeasibleViewsError, NotConvergedError, PosteriorResult,
                     SolverConfig, SupportViolationError, dual_value_and_gradient,
                     primal_from_duals, relative_entropy, solve)
from .views import (TargetSpec, View, ViewCompileError, ViewSchemaError,
                    compile, homogeneous_shrinkage, load_views, view_panel_for,
                    views_from_json)

__version__ = "0.1.0"
