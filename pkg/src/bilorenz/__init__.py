"""Iterated bivariate Lorenz curves.

Marginal distribution functions of the iterated curve converge uniformly to
the golden-section power law x^((1+sqrt(5))/2) while the copula converges to
independence; starts pinned at the Frechet-Hoeffding bounds instead follow
closed-form one-dimensional recursions. This package provides the iteration
engine, the bound recursions, TP2/RR2 classification and per-iteration
dependence diagnostics, plus a CSV-emitting CLI.
"""

from . import bounds, copulas, diagnostics, engine, marginals
from .bounds import (BoundMarginalSeq, check_reflection, frechet_envelope,
                     lorenz_lower_closed, lorenz_upper_closed,
                     step_lower_marginal, step_upper_marginal)
from .copulas import (CopulaSpec, classify_log_concavity, classify_tp2_rr2,
                      copula_cdf, copula_density, density_grid)
from .diagnostics import (GOLDEN_EXPONENT, DiagnosticsTrace, compound_inverse,
                          crossing_point, denominator_sequence,
                          independence_gap, kendall_tau, spearman_rho,
                          sup_power_law_error)
from .engine import (LorenzState, ScenarioSpec, brute_force_step, eval_lorenz,
                     init_state, iterate, iterate_states, lorenz_cdf_grid,
                     step)
from .errors import (BilorenzError, ConfigError, DegenerateDensityError,
                     DomainError, GridError, MomentError,
                     MultipleCrossingsError, NumericalCollapseError,
                     ParameterError, SingularCopulaError)
from .grids import GridCdf
from .marginals import MarginalSpec, eval_cdf, eval_density, eval_quantile, invert_grid, tabulate

__version__ = "0.1.0"
