"""Bayesian updating: conjugate pairs, finite grid priors and two-event Bayes.

Supported likelihood/prior pairs:

=========================  ====================  ==========================================
likelihood                 prior                 posterior
=========================  ====================  ==========================================
Bernoulli(theta)           Beta(a, b)            Beta(a + r, b + n - r)
Binomial(m, theta)         Beta(a, b)            Beta(a + r, b + n*m - r)
Poisson(lam)               Gamma(a, b)           Gamma(a + r, b + n)
Geometric(theta)           Beta(a, b)            Beta(a + n, b + sum x)
Exponential(lam)           Gamma(a, b)           Gamma(a + n, b + sum x)
Uniform(0, theta)          Pareto(a, b)          Pareto(a + n, max(b, max x))
Normal(mu), lam known      NormalPrecision       precision-weighted mean, lam0 + n*lam
Normal(lam), mu known      Gamma(a, b)           Gamma(a + n/2, b + sum (x - mu)^2 / 2)
Normal(mu, lam)            NormalGamma           standard normal-gamma update
=========================  ====================  ==========================================

Here ``r`` is the sum of the observations (the success count for binary data).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy import integrate

from . import _special as sp
from .distributions import (
    Bernoulli,
    Beta,
    Distribution,
    Family,
    Gamma,
    NormalGamma,
    NormalPrecision,
    Pareto,
    PoissonGamma,
)
from .errors import ConvergenceError, DomainError
from .probvector import SUM_TOL, ProbVector

__all__ = [
    "Likelihood",
    "SampleSummary",
    "ConjugateModel",
    "NumericPredictive",
    "GridPrior",
    "posterior",
    "prior_predictive",
    "posterior_predictive",
    "log_likelihood",
    "grid_posterior",
    "grid_predictive",
    "fair_stake",
    "event_posterior",
]


class Likelihood(str, Enum):
    BERNOULLI = "bernoulli"
    BINOMIAL = "binomial"
    POISSON = "poisson"
    GEOMETRIC = "geometric"
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"
    NORMAL_KNOWN_PRECISION = "normal_known_precision"
    NORMAL_KNOWN_MEAN = "normal_known_mean"
    NORMAL = "normal"


CONJUGATE_PRIOR = {
    Likelihood.BERNOULLI: Family.BETA,
    Likelihood.BINOMIAL: Family.BETA,
    Likelihood.POISSON: Family.GAMMA,
    Likelihood.GEOMETRIC: Family.BETA,
    Likelihood.EXPONENTIAL: Family.GAMMA,
    Likelihood.UNIFORM: Family.PARETO,
    Likelihood.NORMAL_KNOWN_PRECISION: Family.NORMAL_PRECISION,
    Likelihood.NORMAL_KNOWN_MEAN: Family.GAMMA,
    Likelihood.NORMAL: Family.NORMAL_GAMMA,
}

_DISCRETE = {Likelihood.BERNOULLI, Likelihood.BINOMIAL, Likelihood.POISSON, Likelihood.GEOMETRIC}


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics retained for every family: ``n``, sum, sum of squares, max."""

    n: int = 0
    sum: float = 0.0
    sum_sq: float = 0.0
    max: float = -math.inf

    def __post_init__(self):
        if self.n < 0 or self.n != int(self.n):
            raise DomainError(f"sample size must be a nonnegative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.n == 0:
            if self.sum != 0 or self.sum_sq != 0:
                raise DomainError("empty sample must have zero sums")
            return
        if self.sum_sq < 0:
            raise DomainError("sum of squares cannot be negative")
        mean = self.sum / self.n
        if self.max < mean - 1e-12 * max(1.0, abs(mean)):
            raise DomainError(f"max {self.max} is below the sample mean {mean}")

    @classmethod
    def from_data(cls, values: Iterable[float]) -> "SampleSummary":
        x = np.asarray(list(values), dtype=float)
        if x.size == 0:
            return cls()
        if not np.all(np.isfinite(x)):
            raise DomainError("observations must be finite")
        return cls(x.size, float(x.sum()), float(np.dot(x, x)), float(x.max()))

    @classmethod
    def binary(cls, n: int, r: int) -> "SampleSummary":
        """Summary of ``n`` Bernoulli trials with ``r`` successes."""
        if not 0 <= r <= n:
            raise DomainError(f"success count r={r} must lie in [0, n={n}]")
        if n == 0:
            return cls()
        return cls(n, float(r), float(r), 1.0 if r > 0 else 0.0)

    @property
    def r(self) -> float:
        return self.sum

    @property
    def mean(self) -> float:
        if self.n == 0:
            raise DomainError("mean of an empty sample")
        return self.sum / self.n

    def merge(self, other: "SampleSummary") -> "SampleSummary":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        return SampleSummary(
            self.n + other.n, self.sum + other.sum, self.sum_sq + other.sum_sq, max(self.max, other.max)
        )


@dataclass(frozen=True)
class ConjugateModel:
    """A likelihood paired with a prior from its conjugate family.

    ``known`` carries the nuisance constant: the precision for
    ``NORMAL_KNOWN_PRECISION`` and the mean for ``NORMAL_KNOWN_MEAN``.
    ``trials`` is the ``m`` of a binomial likelihood.
    """

    likelihood: Likelihood
    prior: Distribution
    known: float | None = None
    trials: int | None = None

    def __post_init__(self):
        lik = Likelihood(self.likelihood)
        object.__setattr__(self, "likelihood", lik)
        want = CONJUGATE_PRIOR[lik]
        if self.prior.family is not want:
            raise DomainError(
                f"{lik.value} likelihood needs a {want.value} prior, got {self.prior.family.value}"
            )
        if lik is Likelihood.NORMAL_KNOWN_PRECISION and (self.known is None or not self.known > 0):
            raise DomainError("normal_known_precision requires a positive known precision")
        if lik is Likelihood.NORMAL_KNOWN_MEAN and (self.known is None or not math.isfinite(self.known)):
            raise DomainError("normal_known_mean requires a finite known mean")
        if lik is Likelihood.BINOMIAL and (self.trials is None or self.trials < 1):
            raise DomainError("binomial likelihood requires trials >= 1")

    def with_prior(self, prior: Distribution) -> "ConjugateModel":
        return replace(self, prior=prior)


def _check_data(model: ConjugateModel, data: SampleSummary) -> None:
    lik = model.likelihood
    if data.n == 0:
        return
    if lik is Likelihood.BERNOULLI and not 0 <= data.r <= data.n:
        raise DomainError(f"success count r={data.r} exceeds n={data.n}")
    if lik is Likelihood.BINOMIAL and not 0 <= data.r <= data.n * model.trials:
        raise DomainError(f"success count r={data.r} exceeds n*m={data.n * model.trials}")
    if lik in (Likelihood.POISSON, Likelihood.GEOMETRIC, Likelihood.EXPONENTIAL) and data.sum < 0:
        raise DomainError(f"{lik.value} data must be nonnegative")
    if lik is Likelihood.UNIFORM and data.max < 0:
        raise DomainError("uniform(0, theta) data must be nonnegative")


def posterior(model: ConjugateModel, data: SampleSummary) -> Distribution:
    """Closed-form conjugate posterior. An empty sample returns the prior unchanged."""
    _check_data(model, data)
    if data.n == 0:
        return model.prior
    lik = model.likelihood
    p = model.prior.params
    n, s = data.n, data.sum
    if lik is Likelihood.BERNOULLI:
        return Beta(p[0] + s, p[1] + (n - s))
    if lik is Likelihood.BINOMIAL:
        return Beta(p[0] + s, p[1] + (n * model.trials - s))
    if lik is Likelihood.POISSON:
        return Gamma(p[0] + s, p[1] + n)
    if lik is Likelihood.GEOMETRIC:
        return Beta(p[0] + n, p[1] + s)
    if lik is Likelihood.EXPONENTIAL:
        return Gamma(p[0] + n, p[1] + s)
    if lik is Likelihood.UNIFORM:
        return Pareto(p[0] + n, max(p[1], data.max))
    if lik is Likelihood.NORMAL_KNOWN_PRECISION:
        mu0, lam0 = p
        lam = model.known
        lam_n = lam0 + n * lam
        return NormalPrecision((lam0 * mu0 + lam * s) / lam_n, lam_n)
    if lik is Likelihood.NORMAL_KNOWN_MEAN:
        mu = model.known
        ss = max(data.sum_sq - 2.0 * mu * s + n * mu * mu, 0.0)
        return Gamma(p[0] + n / 2.0, p[1] + ss / 2.0)
    mu0, n0, a, b = p
    xbar = s / n
    within = max(data.sum_sq - n * xbar * xbar, 0.0)
    return NormalGamma(
        (n0 * mu0 + n * xbar) / (n0 + n),
        n0 + n,
        a + n / 2.0,
        b + 0.5 * within + n0 * n * (xbar - mu0) ** 2 / (2.0 * (n0 + n)),
    )


def _obs_logpmf(lik: Likelihood, x: float, theta, known: float | None, trials: int | None):
    """Log density of one observation ``x`` at parameter ``theta`` (array-friendly in theta)."""
    t = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if lik in _DISCRETE and (x < 0 or x != math.floor(x)):
            return np.full(t.shape, -np.inf)
        if lik is Likelihood.BERNOULLI:
            if x > 1:
                return np.full(t.shape, -np.inf)
            return x * np.log(t) + (1 - x) * np.log1p(-t)
        if lik is Likelihood.BINOMIAL:
            if x > trials:
                return np.full(t.shape, -np.inf)
            lc = sp.gammaln(trials + 1.0) - sp.gammaln(x + 1.0) - sp.gammaln(trials - x + 1.0)
            return lc + x * np.log(t) + (trials - x) * np.log1p(-t)
        if lik is Likelihood.POISSON:
            return x * np.log(t) - t - sp.gammaln(x + 1.0)
        if lik is Likelihood.GEOMETRIC:
            return np.log(t) + x * np.log1p(-t)
        if lik is Likelihood.EXPONENTIAL:
            return np.where(x >= 0, np.log(t) - t * x, -np.inf)
        if lik is Likelihood.UNIFORM:
            return np.where((x >= 0) & (x <= t), -np.log(t), -np.inf)
        if lik is Likelihood.NORMAL_KNOWN_PRECISION:
            return 0.5 * math.log(known / (2 * math.pi)) - 0.5 * known * (x - t) ** 2
        if lik is Likelihood.NORMAL_KNOWN_MEAN:
            return 0.5 * np.log(t / (2 * math.pi)) - 0.5 * t * (x - known) ** 2
    raise DomainError(f"no scalar-parameter likelihood for {lik.value}")


def log_likelihood(
    likelihood: Likelihood,
    theta,
    data: Sequence[float],
    *,
    known: float | None = None,
    trials: int | None = None,
):
    """Sum of per-observation log densities, evaluated at each ``theta``."""
    lik = Likelihood(likelihood)
    total = np.zeros(np.shape(theta))
    for x in data:
        total = total + _obs_logpmf(lik, float(x), theta, known, trials)
    return total


@dataclass(frozen=True)
class NumericPredictive:
    """Predictive density obtained by integrating the likelihood against a prior.

    Used for pairs whose predictive has no closed form here. Each evaluation
    is a one-dimensional adaptive quadrature over the parameter.
    """

    model: ConjugateModel
    tol: float = 1e-9

    @property
    def discrete(self) -> bool:
        return self.model.likelihood in _DISCRETE

    def support(self) -> tuple[float, float]:
        lik = self.model.likelihood
        if lik is Likelihood.BERNOULLI:
            return (0.0, 1.0)
        if lik is Likelihood.BINOMIAL:
            return (0.0, float(self.model.trials))
        if lik in (Likelihood.POISSON, Likelihood.GEOMETRIC, Likelihood.EXPONENTIAL, Likelihood.UNIFORM):
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    def _integrate(self, f: Callable[[float], float], edges: Sequence[float]) -> float:
        # Piecewise over prior quantiles so heavy tails do not starve the adaptive rule.
        total, err_total = 0.0, 0.0
        for lo, hi in zip(edges, edges[1:]):
            if hi <= lo:
                continue
            val, err, *_ = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, epsrel=self.tol, full_output=1)
            total += val
            err_total += err
        if err_total > max(1e-6 * abs(total), 1e-14):
            raise ConvergenceError(
                f"predictive quadrature reached only {err_total:.3g} absolute error", residual=err_total
            )
        return total

    def pdf(self, x: float) -> float:
        x = float(x)
        if math.isnan(x):
            raise DomainError("predictive density evaluated at NaN")
        m = self.model
        prior = m.prior
        if m.likelihood is Likelihood.NORMAL:
            mu0, n0, a, b = prior.params
            lam_prior = Gamma(a, b)
            scale = n0 / (n0 + 1.0)

            def inner(lam: float) -> float:
                prec = lam * scale
                return math.exp(
                    0.5 * math.log(prec / (2 * math.pi)) - 0.5 * prec * (x - mu0) ** 2 + lam_prior.logpdf(lam)
                )

            return self._integrate(inner, _quantile_edges(lam_prior))
        edges = list(_quantile_edges(prior))
        if m.likelihood is Likelihood.UNIFORM:
            if x >= edges[-1]:
                return 0.0
            edges = [max(e, x) for e in edges]

        def integrand(t: float) -> float:
            return math.exp(float(_obs_logpmf(m.likelihood, x, t, m.known, m.trials)) + prior.logpdf(t))

        return self._integrate(integrand, edges)

    def logpdf(self, x: float) -> float:
        v = self.pdf(x)
        return math.log(v) if v > 0 else -math.inf


_EDGE_LEVELS = (1e-14, 1e-8, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1 - 1e-4, 1 - 1e-8, 1 - 1e-14)


@functools.lru_cache(maxsize=256)
def _quantile_edges(prior: Distribution) -> tuple[float, ...]:
    return tuple(prior.quantile(q) for q in _EDGE_LEVELS)


def prior_predictive(model: ConjugateModel):
    """Distribution of one future observation before seeing data.

    Closed forms: Poisson-gamma gives ``PoissonGamma(a, b, 1)``; Bernoulli-beta
    gives ``Bernoulli(a / (a + b))``. Other pairs return a
    :class:`NumericPredictive`.
    """
    prior = model.prior
    if model.likelihood is Likelihood.POISSON:
        a, b = prior.params
        return PoissonGamma(a, b, 1.0)
    if model.likelihood is Likelihood.BERNOULLI:
        a, b = prior.params
        return Bernoulli(a / (a + b))
    return NumericPredictive(model)


def posterior_predictive(model: ConjugateModel, data: SampleSummary):
    """Predictive of the next observation: the prior predictive re-rooted at the posterior."""
    return prior_predictive(model.with_prior(posterior(model, data)))


@dataclass(frozen=True)
class GridPrior:
    """A prior (or posterior) with finitely many support points."""

    support: tuple[float, ...]
    weights: np.ndarray
    _strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        sup = tuple(float(s) for s in self.support)
        w = np.array(self.weights, dtype=float).ravel()
        if len(sup) != w.size or not sup:
            raise DomainError("grid support and weights must be nonempty and the same length")
        if len(set(sup)) != len(sup):
            raise DomainError("grid support values must be distinct")
        if self._strict and np.any(w <= 0):
            raise DomainError("grid prior weights must be strictly positive")
        if np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"grid weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
        w.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)

    def weight(self, theta: float) -> float:
        return float(self.weights[self.support.index(float(theta))])

    def as_probvector(self) -> ProbVector:
        return ProbVector(self.weights, self.support)


LogLik = Callable[[float, np.ndarray], np.ndarray]


def _grid_loglik(likelihood, known, trials) -> LogLik:
    if callable(likelihood):
        return likelihood
    lik = Likelihood(likelihood)
    return lambda x, theta: _obs_logpmf(lik, x, theta, known, trials)


def grid_posterior(
    prior: GridPrior,
    likelihood: Likelihood | str | LogLik,
    data: Sequence[float],
    *,
    known: float | None = None,
    trials: int | None = None,
) -> GridPrior:
    """Posterior over a finite grid, accumulated in log space.

    ``likelihood`` is a family tag or a callable ``(x, theta_array) -> log p(x | theta)``.
    """
    loglik = _grid_loglik(likelihood, known, trials)
    theta = np.asarray(prior.support)
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights)
    for x in data:
        logw = logw + np.asarray(loglik(float(x), theta), dtype=float)
    top = np.max(logw)
    if not np.isfinite(top):
        raise DomainError("data have zero likelihood at every support point")
    w = np.exp(logw - top)
    return GridPrior(prior.support, w / w.sum(), _strict=False)


def grid_predictive(
    prior: GridPrior,
    likelihood: Likelihood | str | LogLik,
    outcomes: Sequence[Hashable] | None = None,
    *,
    known: float | None = None,
    trials: int | None = None,
) -> ProbVector:
    """Mixture ``sum_j p(x | theta_j) w_j`` over the next-observation outcomes.

    Outcomes default to ``(0, 1)`` for Bernoulli and ``0..m`` for binomial
    data. With an explicit list for an unbounded family, the leftover mass
    is reported under the label ``"rest"``.
    """
    if outcomes is None:
        lik = None if callable(likelihood) else Likelihood(likelihood)
        if lik is Likelihood.BERNOULLI:
            outcomes = (0, 1)
        elif lik is Likelihood.BINOMIAL:
            outcomes = tuple(range(int(trials) + 1))
        else:
            raise DomainError("outcomes must be given for this likelihood")
    loglik = _grid_loglik(likelihood, known, trials)
    theta = np.asarray(prior.support)
    probs = np.array([float(np.dot(np.exp(loglik(float(x), theta)), prior.weights)) for x in outcomes])
    rest = 1.0 - probs.sum()
    labels = tuple(outcomes)
    if rest > SUM_TOL:
        probs = np.append(probs, rest)
        labels = labels + ("rest",)
    elif rest < -1e-9:
        raise DomainError("outcome probabilities exceed one; outcomes are not distinct")
    return ProbVector.normalized(probs, labels)


def fair_stake(predictive: ProbVector, b: float) -> float:
    """Stake ``a`` on outcome 1 that makes a bet against ``b`` on outcome 0 fair: ``a = b p(1)/p(0)``."""
    return b * predictive[1] / predictive[0]


def event_posterior(prior_B: float, p_A_given_B: float, p_A_given_notB: float) -> float:
    """``P(B | A)`` from ``P(B)``, ``P(A | B)`` and ``P(A | not B)``."""
    for name, v in (("prior_B", prior_B), ("p_A_given_B", p_A_given_B), ("p_A_given_notB", p_A_given_notB)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {v}")
    num = p_A_given_B * prior_B
    den = num + p_A_given_notB * (1.0 - prior_B)
    if den <= 0.0:
        raise DomainError("P(A) = 0: the evidence is impossible under the model")
    return num / den
