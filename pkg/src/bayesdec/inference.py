"""Inference framed as decisions: point estimates, hypothesis contrast, HPD regions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

import numpy as np
from scipy import optimize

from .decision import DecisionProblem, expected_utilities, optimal_actions
from .distributions import Distribution, Family
from .errors import DomainError, MomentError, UnsupportedError
from .probvector import ProbVector

__all__ = [
    "EstimationUtility",
    "Region",
    "HypothesisPartition",
    "ContrastResult",
    "point_estimate",
    "hypothesis_probabilities",
    "contrast",
    "hpd_region",
    "RESIDUAL_LABEL",
]

RESIDUAL_LABEL = "rest"


class EstimationUtility(str, Enum):
    QUADRATIC = "quadratic"
    ABSOLUTE = "absolute"
    RELATIVE_QUADRATIC = "relative_quadratic"


def point_estimate(posterior: Distribution, utility: EstimationUtility | str) -> float:
    """Bayes estimate under ``utility``.

    quadratic -> posterior mean; absolute -> median;
    relative quadratic ``-((t_hat - t) / t_hat)^2`` -> ``E[t^2] / E[t]``.
    """
    kind = EstimationUtility(utility)
    if kind is EstimationUtility.QUADRATIC:
        return float(posterior.mean)
    if kind is EstimationUtility.ABSOLUTE:
        return posterior.quantile(0.5)
    mean, var = posterior.moments()
    if not mean > 0:
        raise MomentError("relative quadratic estimate needs a positive posterior mean")
    return float((var + mean * mean) / mean)


@dataclass(frozen=True)
class Region:
    """Interval ``(lo, hi]`` for continuous laws; integer range ``lo..hi`` inclusive for discrete ones."""

    label: Hashable
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise DomainError(f"region {self.label!r} has lo > hi")


@dataclass(frozen=True)
class HypothesisPartition:
    regions: tuple[Region, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise DomainError("a partition needs at least one region")
        labels = [r.label for r in regions]
        if len(set(labels)) != len(labels) or RESIDUAL_LABEL in labels:
            raise DomainError(f"region labels must be distinct and not {RESIDUAL_LABEL!r}")
        object.__setattr__(self, "regions", regions)

    def check_disjoint(self, discrete: bool) -> None:
        ordered = sorted(self.regions, key=lambda r: (r.lo, r.hi))
        for a, b in zip(ordered, ordered[1:]):
            overlap = b.lo <= a.hi if discrete else b.lo < a.hi
            if overlap:
                raise DomainError(f"regions {a.label!r} and {b.label!r} overlap")


def _region_mass(dist: Distribution, r: Region) -> float:
    if dist.discrete:
        lo = math.ceil(r.lo) if math.isfinite(r.lo) else -math.inf
        hi = math.floor(r.hi) if math.isfinite(r.hi) else math.inf
        if hi < lo:
            return 0.0
        return dist.cdf(hi) - dist.cdf(lo - 1)
    return dist.cdf(r.hi) - dist.cdf(r.lo)


def hypothesis_probabilities(dist: Distribution, partition: HypothesisPartition) -> ProbVector:
    """Probability of each region; any uncovered mass goes to a ``"rest"`` region."""
    if dist.family is Family.NORMAL_GAMMA:
        raise UnsupportedError("hypotheses over a bivariate law are not supported")
    partition.check_disjoint(dist.discrete)
    probs = [max(_region_mass(dist, r), 0.0) for r in partition.regions]
    labels = [r.label for r in partition.regions]
    rest = 1.0 - sum(probs)
    if rest > 1e-12:
        probs.append(rest)
        labels.append(RESIDUAL_LABEL)
    return ProbVector.normalized(probs, labels)


@dataclass(frozen=True)
class ContrastResult:
    chosen: tuple[Hashable, ...]
    probabilities: ProbVector
    actions: tuple[Hashable, ...]
    expected_utilities: np.ndarray


def contrast(
    dist: Distribution,
    partition: HypothesisPartition,
    utility=None,
    actions: Sequence[Hashable] | None = None,
) -> ContrastResult:
    """Choose among hypotheses.

    Without ``utility`` each action is "accept H_i" with an indicator payoff,
    so the most probable hypothesis wins. With a ``k x m`` matrix over
    actions and the partition's regions the choice is the expected-utility
    optimum.
    """
    probs = hypothesis_probabilities(dist, partition)
    m = len(partition.regions)
    if probs.labels[-1] == RESIDUAL_LABEL:
        if utility is not None:
            raise DomainError("the regions must cover the support when a utility matrix is given")
    if utility is None:
        u = np.eye(len(probs))
        acts = tuple(probs.labels)
    else:
        u = np.asarray(utility, dtype=float)
        if u.ndim != 2 or u.shape[1] != m:
            raise DomainError(f"utility matrix must have {m} columns, one per hypothesis; got shape {u.shape}")
        acts = tuple(actions) if actions is not None else tuple(f"a{i + 1}" for i in range(u.shape[0]))
        if len(acts) != u.shape[0]:
            raise DomainError("one action label per utility row is required")
    problem = DecisionProblem(acts, tuple(probs.labels), u, probs.weights)
    return ContrastResult(optimal_actions(problem), probs, acts, expected_utilities(problem))


def _scan_bounds(dist: Distribution) -> tuple[float, float]:
    lo, hi = dist.support()
    qlo, qhi = dist.quantile(1e-12), dist.quantile(1.0 - 1e-12)
    return (lo if math.isfinite(lo) else qlo), (hi if math.isfinite(hi) else qhi)


def _superlevel(dist: Distribution, log_c: float, grid: np.ndarray, logd: np.ndarray) -> list[tuple[float, float]]:
    """Intervals where ``log density >= log_c``, with roots refined by Brent's method."""
    above = logd >= log_c
    if not np.any(above):
        return []
    f = lambda x: float(dist.logpdf(x)) - log_c  # noqa: E731
    intervals = []
    i = 0
    n = grid.size
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        left = grid[i] if i == 0 else optimize.brentq(f, grid[i - 1], grid[i], xtol=1e-13, rtol=1e-15)
        right = grid[j] if j == n - 1 else optimize.brentq(f, grid[j], grid[j + 1], xtol=1e-13, rtol=1e-15)
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals


def hpd_region(dist: Distribution, mass: float, grid_size: int = 4001) -> list[tuple[float, float]]:
    """Highest-density region of probability ``mass``, as a list of intervals.

    Bisects on a density threshold ``c``: the set where the density is at
    least ``c`` is located on a grid and its boundaries refined by root
    finding. A density that is largest at a finite edge of the support gives
    an interval anchored at that edge.
    """
    if not 0.0 < mass < 1.0:
        raise DomainError(f"mass must lie in (0, 1), got {mass}")
    if dist.discrete:
        raise DomainError("highest-density regions are defined here for continuous laws only")
    if dist.family is Family.NORMAL_GAMMA:
        raise UnsupportedError("highest-density regions of a bivariate law are not supported")
    lo, hi = _scan_bounds(dist)
    grid = np.linspace(lo, hi, grid_size)
    mode = dist.mode()
    if mode is not None and lo < mode < hi:
        grid = np.union1d(grid, [mode])
    with np.errstate(divide="ignore"):
        logd = np.asarray(dist.logpdf(grid), dtype=float)
    finite = logd[np.isfinite(logd)]
    top = float(np.max(logd))
    if not math.isfinite(top):
        # Unbounded density at an edge: cap the search at the largest finite value.
        top = float(np.max(finite)) + 50.0

    def covered(log_c: float) -> tuple[float, list[tuple[float, float]]]:
        ivs = _superlevel(dist, log_c, grid, logd)
        return sum(dist.cdf(b) - dist.cdf(a) for a, b in ivs), ivs

    c_hi = top
    c_lo = float(np.min(finite)) - 1.0
    m_lo, best = covered(c_lo)
    if m_lo < mass:
        raise DomainError("scan range does not hold the requested mass")
    for _ in range(200):
        mid = 0.5 * (c_lo + c_hi)
        m_mid, ivs = covered(mid)
        if m_mid >= mass:
            c_lo, best = mid, ivs
            if m_mid - mass < 1e-10:
                break
        else:
            c_hi = mid
        if c_hi - c_lo < 1e-14:
            break
    return best
