"""Simulation, moment estimators and Liu-West particle filtering for
partially observed branching processes with Poisson offspring."""

__version__ = "0.1.0"

from .errors import (
    BranchFilterError,
    DegeneracyError,
    DegenerateSeriesError,
    DomainError,
    InfeasibleError,
    InsufficientDataError,
    PointMassError,
    PriorInfeasibleError,
    SurvivalConditioningError,
)
from .fixtures import FIXTURES, get_fixture
from .frequentist import (
    EstimateReport,
    ci_gamma2,
    ci_m,
    estimate_pi_lambda,
    estimate_report,
    gamma_hat_odd_sq,
    gamma_hat_sq,
    m_bar,
    m_hat_odd,
    m_tilde,
)
from .liu_west import FilterConfig, FilterResult, ParticleCloud, init_cloud, lw_step, run_filter, shrinkage_constants
from .model import (
    ModelParams,
    MomentSet,
    Trajectory,
    brute_force_step,
    compute_moments,
    gamma2_epidemic,
    invert_moments,
    lambda_from_pi,
    simulate,
    simulate_many,
    transition_mean,
    transition_sample,
    transition_sample_marginal,
)
from .posterior import PosteriorSummary, hpd_from_density, summarize, weighted_kde_1d
from .stochastic import RngStream, binomial_log_pmf, binomial_sample, mvn2_sample, poisson_sample, weighted_mean_cov
