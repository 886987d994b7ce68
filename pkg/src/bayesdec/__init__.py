"""Bayesian inference and decision analysis with conjugate families."""

__version__ = "0.1.0"

from .conjugate import (
    ConjugateModel,
    GridPrior,
    Likelihood,
    SampleSummary,
    event_posterior,
    fair_stake,
    grid_posterior,
    grid_predictive,
    posterior,
    posterior_predictive,
    prior_predictive,
)
from .decision import (
    Chance,
    Decision,
    DecisionProblem,
    Terminal,
    admissible_actions,
    chance_update,
    evpi,
    expected_utilities,
    optimal_actions,
    solve_tree,
    value_of_data,
    value_of_experiment,
)
from .distributions import (
    Bernoulli,
    Beta,
    Binomial,
    ContinuousUniform,
    Distribution,
    Family,
    Gamma,
    Geometric,
    NormalGamma,
    NormalPrecision,
    Pareto,
    Poisson,
    PoissonGamma,
)
from .elicitation import IntervalMass, Mean, Mode, Quantile, elicit
from .errors import (
    BayesError,
    ConvergenceError,
    DomainError,
    MomentError,
    NoSolutionError,
    ProprietyError,
    RegularityError,
    UnsupportedError,
)
from .inference import EstimationUtility, HypothesisPartition, Region, contrast, hpd_region, point_estimate
from .jeffreys import fisher_information, jeffreys_posterior, jeffreys_prior
from .probvector import ProbVector
from .scoring import ScoreRule, exam_rule, info_of_data, log_discrepancy, score
