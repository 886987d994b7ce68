"""Fisher information and Jeffreys priors for one-parameter models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import _special as sp
from .conjugate import Likelihood, SampleSummary
from .distributions import Beta, Distribution, Gamma, NormalPrecision
from .errors import DomainError, ProprietyError, RegularityError, UnsupportedError

__all__ = [
    "ImproperDensity",
    "fisher_information",
    "jeffreys_prior",
    "jeffreys_posterior",
    "score_information",
]


def _check_param(lik: Likelihood, theta: float) -> None:
    if lik is Likelihood.UNIFORM:
        raise RegularityError("uniform(0, theta) has a parameter-dependent support; Fisher information is undefined")
    if lik is Likelihood.NORMAL:
        raise UnsupportedError("two-parameter normal has no scalar Fisher information")
    if not math.isfinite(theta):
        raise DomainError(f"parameter must be finite, got {theta}")
    if lik in (Likelihood.BERNOULLI, Likelihood.BINOMIAL, Likelihood.GEOMETRIC):
        if not 0.0 < theta < 1.0:
            raise DomainError(f"theta must lie in (0, 1), got {theta}")
    elif lik is not Likelihood.NORMAL_KNOWN_PRECISION and theta <= 0:
        raise DomainError(f"parameter must be > 0, got {theta}")


def fisher_information(
    likelihood: Likelihood | str,
    theta: float,
    *,
    trials: int | None = None,
    known: float | None = None,
) -> float:
    """Per-observation Fisher information ``-E[d^2/dtheta^2 log p(X | theta)]``.

    For ``NORMAL_KNOWN_PRECISION`` the parameter is the mean and ``known`` the
    precision; for ``NORMAL_KNOWN_MEAN`` the parameter is the precision.
    """
    lik = Likelihood(likelihood)
    _check_param(lik, theta)
    t = theta
    if lik is Likelihood.BERNOULLI:
        return 1.0 / (t * (1.0 - t))
    if lik is Likelihood.BINOMIAL:
        if trials is None or trials < 1:
            raise DomainError("binomial information needs trials >= 1")
        return trials / (t * (1.0 - t))
    if lik is Likelihood.POISSON:
        return 1.0 / t
    if lik is Likelihood.EXPONENTIAL:
        return 1.0 / (t * t)
    if lik is Likelihood.GEOMETRIC:
        return 1.0 / (t * t * (1.0 - t))
    if lik is Likelihood.NORMAL_KNOWN_PRECISION:
        if known is None or not known > 0:
            raise DomainError("known precision must be positive")
        return float(known)
    return 1.0 / (2.0 * t * t)


@dataclass(frozen=True)
class ImproperDensity:
    """An unnormalized prior density, possibly improper.

    ``distribution`` is set only when the density is a proper member of a
    named family (for example ``Beta(1/2, 1/2)``).
    """

    likelihood: Likelihood
    log_kernel: Callable[[float], float]
    support: tuple[float, float]
    proper: bool
    description: str
    distribution: Distribution | None = None

    def __call__(self, theta: float) -> float:
        lo, hi = self.support
        if not lo < theta < hi:
            return 0.0
        return math.exp(self.log_kernel(theta))


def jeffreys_prior(likelihood: Likelihood | str, *, trials: int | None = None, known: float | None = None) -> ImproperDensity:
    """Jeffreys rule ``pi(theta) proportional to sqrt(I(theta))``. The result is never normalized."""
    lik = Likelihood(likelihood)
    if lik in (Likelihood.UNIFORM, Likelihood.NORMAL):
        _check_param(lik, 1.0)
    if lik is Likelihood.NORMAL_KNOWN_PRECISION:
        fisher_information(lik, 0.0, known=known)

    def log_kernel(t: float) -> float:
        return 0.5 * math.log(fisher_information(lik, t, trials=trials, known=known))

    if lik in (Likelihood.BERNOULLI, Likelihood.BINOMIAL):
        return ImproperDensity(lik, log_kernel, (0.0, 1.0), True, "Beta(1/2, 1/2)", Beta(0.5, 0.5))
    table = {
        Likelihood.POISSON: ((0.0, math.inf), "lam^(-1/2)"),
        Likelihood.EXPONENTIAL: ((0.0, math.inf), "1/lam"),
        Likelihood.GEOMETRIC: ((0.0, 1.0), "theta^(-1) (1 - theta)^(-1/2)"),
        Likelihood.NORMAL_KNOWN_PRECISION: ((-math.inf, math.inf), "constant"),
        Likelihood.NORMAL_KNOWN_MEAN: ((0.0, math.inf), "1/lam"),
    }
    support, desc = table[lik]
    return ImproperDensity(lik, log_kernel, support, False, desc)


def jeffreys_posterior(
    likelihood: Likelihood | str,
    data: SampleSummary,
    *,
    trials: int | None = None,
    known: float | None = None,
) -> Distribution:
    """Posterior under the Jeffreys prior; raises :class:`ProprietyError` when it cannot be normalized."""
    lik = Likelihood(likelihood)
    jeffreys_prior(lik, trials=trials, known=known)
    n, s = data.n, data.sum
    if lik is Likelihood.BERNOULLI:
        if not 0 <= s <= n:
            raise DomainError(f"success count r={s} must lie in [0, n={n}]")
        return Beta(s + 0.5, (n - s) + 0.5)
    if lik is Likelihood.BINOMIAL:
        if trials is None or not 0 <= s <= n * trials:
            raise DomainError("binomial data need trials and 0 <= r <= n*m")
        return Beta(s + 0.5, (n * trials - s) + 0.5)
    if n == 0:
        raise ProprietyError(f"the Jeffreys prior for {lik.value} is improper and there are no data to normalize it")
    if lik is Likelihood.POISSON:
        if s < 0:
            raise DomainError("Poisson data must be nonnegative")
        return Gamma(s + 0.5, float(n))
    if lik is Likelihood.EXPONENTIAL:
        if not s > 0:
            raise ProprietyError("exponential posterior needs a positive sum of observations")
        return Gamma(float(n), s)
    if lik is Likelihood.GEOMETRIC:
        return Beta(float(n), s + 0.5)
    if lik is Likelihood.NORMAL_KNOWN_PRECISION:
        return NormalPrecision(s / n, n * known)
    ss = data.sum_sq - 2.0 * known * s + n * known * known
    if not ss > 0:
        raise ProprietyError("normal known-mean posterior needs a positive sum of squared deviations")
    return Gamma(n / 2.0, ss / 2.0)


def _complex_logp(lik: Likelihood, x: float, t: complex, known: float | None, trials: int | None) -> complex:
    """Log density with complex parameter, for complex-step differentiation."""
    if lik is Likelihood.BERNOULLI:
        return x * np.log(t) + (1 - x) * np.log(1 - t)
    if lik is Likelihood.BINOMIAL:
        lc = sp.gammaln(trials + 1.0) - sp.gammaln(x + 1.0) - sp.gammaln(trials - x + 1.0)
        return lc + x * np.log(t) + (trials - x) * np.log(1 - t)
    if lik is Likelihood.POISSON:
        return x * np.log(t) - t - sp.gammaln(x + 1.0)
    if lik is Likelihood.GEOMETRIC:
        return np.log(t) + x * np.log(1 - t)
    if lik is Likelihood.EXPONENTIAL:
        return np.log(t) - t * x
    if lik is Likelihood.NORMAL_KNOWN_PRECISION:
        return 0.5 * math.log(known / (2 * math.pi)) - 0.5 * known * (x - t) ** 2
    return 0.5 * np.log(t / (2 * math.pi)) - 0.5 * t * (x - known) ** 2


def score_information(
    likelihood: Likelihood | str,
    phi: float,
    theta_of_phi: Callable[[complex], complex],
    *,
    trials: int | None = None,
    known: float | None = None,
    h: float = 1e-20,
) -> float:
    """Fisher information of the reparameterized model, ``E[(d/dphi log p(X | theta(phi)))^2]``.

    The score is taken by complex-step differentiation of the log density in
    ``phi`` (so ``theta_of_phi`` must accept complex input), and the
    expectation by exact summation or adaptive quadrature over ``X``. No
    closed-form information or chain rule is used, which makes this an
    independent check of the change-of-variables identity
    ``sqrt(I(phi)) = sqrt(I(theta)) |dtheta/dphi|``.
    """
    lik = Likelihood(likelihood)
    theta = float(np.real(theta_of_phi(complex(phi))))
    _check_param(lik, theta)

    def score(x: float) -> float:
        return float(np.imag(_complex_logp(lik, x, theta_of_phi(complex(phi, h)), known, trials)) / h)

    def logp(x: float) -> float:
        return float(np.real(_complex_logp(lik, x, complex(theta), known, trials)))

    if lik in (Likelihood.BERNOULLI, Likelihood.BINOMIAL, Likelihood.POISSON, Likelihood.GEOMETRIC):
        if lik is Likelihood.BERNOULLI:
            xs = range(2)
        elif lik is Likelihood.BINOMIAL:
            xs = range(int(trials) + 1)
        else:
            # Sum until the remaining tail mass is negligible.
            mean = theta if lik is Likelihood.POISSON else (1 - theta) / theta
            sd = math.sqrt(theta if lik is Likelihood.POISSON else (1 - theta) / theta**2)
            xs = range(int(mean + 40 * sd + 60))
        return math.fsum(math.exp(logp(x)) * score(x) ** 2 for x in xs)
    if lik is Likelihood.EXPONENTIAL:
        lo, hi = 0.0, 60.0 / theta
    elif lik is Likelihood.NORMAL_KNOWN_PRECISION:
        sd = 1.0 / math.sqrt(known)
        lo, hi = theta - 40 * sd, theta + 40 * sd
    else:
        sd = 1.0 / math.sqrt(theta)
        lo, hi = known - 40 * sd, known + 40 * sd
    val, _ = integrate.quad(lambda x: math.exp(logp(x)) * score(x) ** 2, lo, hi, limit=400, epsabs=0, epsrel=1e-13)
    return val
