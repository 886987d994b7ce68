"""Scoring rules, logarithmic discrepancy and information measures.

Logarithms are natural throughout, so information is measured in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

import numpy as np
from scipy import integrate

from . import _special as sp
from .distributions import Distribution, NormalPrecision
from .errors import ConvergenceError, DomainError
from .probvector import ProbVector, as_probvector

__all__ = [
    "ProbVector",
    "RuleKind",
    "ScoreRule",
    "score",
    "exam_rule",
    "expected_score",
    "log_discrepancy",
    "binomial_poisson_discrepancy",
    "best_normal_approx",
    "info_of_data",
    "expected_info_of_experiment",
]


class RuleKind(str, Enum):
    QUADRATIC = "quadratic"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class ScoreRule:
    """``A {2 q_j - sum_i q_i^2} + B_j`` (quadratic) or ``A log q_j + B_j`` (logarithmic).

    ``B`` is a scalar applied to every label or one offset per label.
    """

    kind: RuleKind
    A: float = 1.0
    B: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if not self.A > 0:
            raise DomainError(f"scoring constant A must be > 0, got {self.A}")
        if np.ndim(self.B):
            object.__setattr__(self, "B", tuple(float(b) for b in self.B))

    def offset(self, j: int, size: int) -> float:
        if isinstance(self.B, tuple):
            if len(self.B) != size:
                raise DomainError(f"rule has {len(self.B)} offsets for {size} labels")
            return self.B[j]
        return float(self.B)


def score(rule: ScoreRule, q, occurred: Hashable) -> float:
    """Score of reporting ``q`` when ``occurred`` happens."""
    q = as_probvector(q)
    j = q.index(occurred)
    w = q.weights
    b = rule.offset(j, len(q))
    if rule.kind is RuleKind.QUADRATIC:
        return rule.A * (2.0 * w[j] - float(w @ w)) + b
    if w[j] <= 0:
        raise DomainError(f"logarithmic score of an outcome reported with probability 0 ({occurred!r})")
    return rule.A * math.log(w[j]) + b


def exam_rule(m: int) -> ScoreRule:
    """Quadratic rule for an ``m``-option question: 1 for certainty on the truth, 0 for a uniform report."""
    if m < 2 or m != int(m):
        raise DomainError(f"an exam question needs m >= 2 options, got {m}")
    return ScoreRule(RuleKind.QUADRATIC, m / (m - 1.0), -1.0 / (m - 1.0))


def expected_score(rule: ScoreRule, q, p) -> float:
    """``sum_j score(rule, q, j) p_j``."""
    q = as_probvector(q)
    p = as_probvector(p, q.labels)
    if p.labels != q.labels:
        raise DomainError("q and p must share labels")
    total = 0.0
    for lab, pj in zip(p.labels, p.weights):
        if pj > 0:
            total += pj * score(rule, q, lab)
    return total


def _discrete_kl(p: np.ndarray, q: np.ndarray) -> float:
    if p.shape != q.shape:
        raise DomainError("distributions must have the same number of outcomes")
    on = p > 0
    if np.any(q[on] <= 0):
        raise DomainError("q assigns zero probability where p is positive")
    return float(np.sum(p[on] * (np.log(p[on]) - np.log(q[on]))))


def log_discrepancy(p, q, *, bounds: tuple[float, float] | None = None, tol: float = 1e-8) -> float:
    """Logarithmic discrepancy ``sum_j p_j log(p_j / q_j)`` of ``q`` from the reference ``p``.

    Discrete inputs are probability vectors or arrays; ``0 log 0`` counts as 0.
    Continuous inputs are objects with ``logpdf``; the integral runs over
    ``bounds`` or, by default, the 1e-12 and 1 - 1e-12 quantiles of ``p``.
    """
    if hasattr(p, "logpdf") and hasattr(q, "logpdf"):
        if bounds is None:
            bounds = (p.quantile(1e-12), p.quantile(1.0 - 1e-12))
        lo, hi = bounds

        def integrand(x: float) -> float:
            lp = float(p.logpdf(x))
            if lp == -math.inf:
                return 0.0
            lq = float(q.logpdf(x))
            if lq == -math.inf:
                raise DomainError(f"q has zero density at {x} where p is positive")
            return math.exp(lp) * (lp - lq)

        val, err = integrate.quad(integrand, lo, hi, limit=500, epsabs=tol, epsrel=tol)
        if err > 10 * tol * max(1.0, abs(val)):
            raise ConvergenceError(f"discrepancy quadrature error {err:.3g}", residual=err)
        return max(val, 0.0)
    pw = p.weights if isinstance(p, ProbVector) else as_probvector(p).weights
    qw = q.weights if isinstance(q, ProbVector) else as_probvector(q).weights
    return _discrete_kl(pw, qw)


def binomial_poisson_discrepancy(n: int, theta: float) -> float:
    """Discrepancy of ``Poisson(n theta)`` from ``Binomial(n, theta)``, in closed form.

    ``log n! + n [(1 - theta) log(1 - theta) + theta (1 - log n)] - phi(n, theta)``
    where ``phi(n, theta) = sum_k C(n, k) (1 - theta)^k theta^(n-k) log k!``.
    Terms of ``phi`` are formed in log space.
    """
    if n < 1 or n != int(n):
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    n = int(n)
    k = np.arange(2, n + 1, dtype=float)
    log_fact = sp.gammaln(k + 1.0)
    log_choose = sp.gammaln(n + 1.0) - sp.gammaln(k + 1.0) - sp.gammaln(n - k + 1.0)
    log_w = log_choose + k * math.log1p(-theta) + (n - k) * math.log(theta)
    phi = float(np.sum(np.exp(log_w) * log_fact)) if n >= 2 else 0.0
    head = float(sp.gammaln(n + 1.0))
    val = head + n * ((1 - theta) * math.log1p(-theta) + theta * (1 - math.log(n))) - phi
    return max(val, 0.0)


def best_normal_approx(mean: float, variance: float) -> Distribution:
    """Normal closest in logarithmic discrepancy to a target with this mean and variance."""
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance}")
    return NormalPrecision(mean, 1.0 / variance)


def info_of_data(prior, posterior) -> float:
    """Information the data provide: discrepancy of the prior from the posterior."""
    prior = as_probvector(prior)
    posterior = as_probvector(posterior, prior.labels)
    if np.any(prior.weights <= 0):
        raise DomainError("prior probabilities must be strictly positive")
    return log_discrepancy(posterior, prior)


def expected_info_of_experiment(prior, marginals: Sequence[float], posteriors: Sequence) -> float:
    """``sum_i I(D_i) P(D_i)`` over the outcomes of an experiment."""
    m = as_probvector(marginals).weights
    if len(posteriors) != m.size:
        raise DomainError("one posterior per outcome is required")
    return float(sum(mi * info_of_data(prior, post) for mi, post in zip(m, posteriors) if mi > 0))
