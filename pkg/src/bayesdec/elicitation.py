"""Prior elicitation: turn expert statements into hyperparameters.

Two-parameter families are solved by pinning one parameter analytically
(from a mean or mode statement) and root-finding the other on a log scale.
Pairs without a mean or mode fall back to a damped Newton iteration in log
parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import optimize

from ._special import norm_cdf
from .distributions import Beta, Distribution, Family, Gamma, NormalPrecision
from .errors import DomainError, NoSolutionError

log = logging.getLogger(__name__)

__all__ = [
    "Mean",
    "Mode",
    "Quantile",
    "IntervalMass",
    "Constraint",
    "elicit",
    "residuals",
    "SEARCH_BOUNDS",
]

#: Search interval for the free shape/concentration parameter.
SEARCH_BOUNDS = (1e-3, 1e7)
_SCAN_POINTS = 241
_PROB_TOL = 1e-4
_MOMENT_RTOL = 1e-6


@dataclass(frozen=True)
class Mean:
    value: float


@dataclass(frozen=True)
class Mode:
    value: float


@dataclass(frozen=True)
class Quantile:
    level: float
    value: float

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {self.level}")


@dataclass(frozen=True)
class IntervalMass:
    lo: float
    hi: float
    mass: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")
        if not 0.0 < self.mass < 1.0:
            raise DomainError(f"interval mass must lie in (0, 1), got {self.mass}")


Constraint = Union[Mean, Mode, Quantile, IntervalMass]


def _mode_of(d: Distribution) -> float:
    m = d.mode()
    if m is None:
        raise DomainError(f"{d} has no unique mode")
    return m


def _residual(d: Distribution, c: Constraint) -> float:
    """Signed miss of ``d`` on ``c``; relative for moments, absolute for probabilities."""
    if isinstance(c, Mean):
        return (d.mean - c.value) / max(abs(c.value), 1e-300)
    if isinstance(c, Mode):
        return (_mode_of(d) - c.value) / max(abs(c.value), 1e-300)
    if isinstance(c, Quantile):
        return d.cdf(c.value) - c.level
    return d.cdf(c.hi) - d.cdf(c.lo) - c.mass


def residuals(d: Distribution, constraints: Sequence[Constraint]) -> list[float]:
    """Residual of each constraint under ``d`` (see :func:`elicit` for tolerances)."""
    return [_residual(d, c) for c in constraints]


def _satisfied(d: Distribution, constraints: Sequence[Constraint]) -> bool:
    for c, r in zip(constraints, residuals(d, constraints)):
        tol = _MOMENT_RTOL if isinstance(c, (Mean, Mode)) else _PROB_TOL
        if not abs(r) <= tol:
            return False
    return True


def _solve_1d(build: Callable[[float], Distribution], target: Constraint, lo: float, hi: float) -> Distribution:
    """Root-find the free parameter ``t`` of ``build(t)`` so that ``target`` holds.

    The interval is scanned on a log grid for sign changes, which also
    detects infeasible statements before any iteration. Quantile statements
    can have two roots (a J-shaped low-concentration one and an interior-mode
    one); the most concentrated root is returned.
    """

    def f(log_t: float) -> float:
        try:
            return _residual(build(math.exp(log_t)), target)
        except DomainError:
            return math.nan

    grid = np.linspace(math.log(lo), math.log(hi), _SCAN_POINTS)
    vals = np.array([f(g) for g in grid])
    finite = np.isfinite(vals)
    roots = []
    for i in range(len(grid) - 1):
        if finite[i] and finite[i + 1] and vals[i] * vals[i + 1] <= 0:
            if vals[i + 1] == 0:
                continue
            if vals[i] == 0:
                roots.append(grid[i])
            else:
                roots.append(
                    optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
                )
    if roots:
        if len(roots) > 1:
            log.debug("multiple roots %s; keeping the largest", [math.exp(r) for r in roots])
        return build(math.exp(max(roots)))
    if finite.any():
        # A root where the residual only touches zero shows no sign change on the grid.
        i = int(np.nanargmin(np.where(finite, np.abs(vals), np.nan)))
        lo_g, hi_g = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = optimize.minimize_scalar(
            lambda g: abs(f(g)) if math.isfinite(f(g)) else math.inf,
            bounds=(lo_g, hi_g), method="bounded", options={"xatol": 1e-12},
        )
        if abs(f(res.x)) <= _PROB_TOL:
            return build(math.exp(res.x))
    ends =[float(v) for v in vals[finite][[0, -1]]] if finite.any() else []
    raise NoSolutionError(
        f"no parameter in [{lo:g}, {hi:g}] satisfies {target}; residuals at the ends {ends}",
        residual=min((abs(v) for v in ends), default=math.nan),
    )


def _newton_2d(
    build: Callable[[float, float], Distribution],
    constraints: Sequence[Constraint],
    start: tuple[float, float],
) -> Distribution:
    """Damped Newton on log-parameters with a finite-difference Jacobian."""

    def F(z: np.ndarray) -> np.ndarray:
        return np.array(residuals(build(math.exp(z[0]), math.exp(z[1])), constraints))

    z = np.log(np.asarray(start, dtype=float))
    fz = F(z)
    for _ in range(200):
        if np.max(np.abs(fz)) < 1e-12:
            break
        h = 1e-6
        J = np.column_stack([(F(z + h * e) - fz) / h for e in np.eye(2)])
        try:
            step = np.linalg.solve(J, -fz)
        except np.linalg.LinAlgError as exc:
            raise NoSolutionError("singular Jacobian during elicitation", residual=float(np.max(np.abs(fz)))) from exc
        lam = 1.0
        while lam > 1e-6:
            cand = z + lam * step
            try:
                fc = F(cand)
            except DomainError:
                fc = None
            if fc is not None and np.all(np.isfinite(fc)) and np.linalg.norm(fc) < np.linalg.norm(fz):
                z, fz = cand, fc
                break
            lam *= 0.5
        else:
            break
    d = build(math.exp(z[0]), math.exp(z[1]))
    if not _satisfied(d, constraints):
        raise NoSolutionError(
            f"damped Newton stalled with residuals {list(fz)}", residual=float(np.max(np.abs(fz)))
        )
    return d


def _split(constraints: Sequence[Constraint]):
    anchors = [c for c in constraints if isinstance(c, (Mean, Mode))]
    others = [c for c in constraints if not isinstance(c, (Mean, Mode))]
    return anchors, others


def _elicit_beta(constraints: Sequence[Constraint]) -> Distribution:
    anchors, others = _split(constraints)
    means = [c for c in anchors if isinstance(c, Mean)]
    modes = [c for c in anchors if isinstance(c, Mode)]
    for c in anchors:
        if not 0.0 < c.value < 1.0:
            raise DomainError(f"beta {type(c).__name__.lower()} must lie in (0, 1), got {c.value}")
    if means and modes:
        # mean m and mode o give beta = a (1 - m) / m and (a - 1) / (a + b - 2) = o.
        m, o = means[0].value, modes[0].value
        denom = o / m - 1.0
        a = (2.0 * o - 1.0) / denom if denom != 0 else math.nan
        if not a > 1.0:
            raise NoSolutionError(f"no beta has mean {m} and mode {o}")
        return Beta(a, a * (1.0 - m) / m)
    lo, hi = SEARCH_BOUNDS
    if means:
        m = means[0].value
        return _solve_1d(lambda a: Beta(a, a * (1.0 - m) / m), others[0], lo, hi)
    if modes:
        o = modes[0].value
        return _solve_1d(lambda a: Beta(1.0 + a, 1.0 + a * (1.0 - o) / o), others[0], lo, hi)
    return _newton_2d(Beta, constraints, (2.0, 2.0))


def _elicit_gamma(constraints: Sequence[Constraint]) -> Distribution:
    anchors, others = _split(constraints)
    means = [c for c in anchors if isinstance(c, Mean)]
    modes = [c for c in anchors if isinstance(c, Mode)]
    for c in means:
        if not c.value > 0:
            raise DomainError(f"gamma mean must be positive, got {c.value}")
    for c in modes:
        if not c.value >= 0:
            raise DomainError(f"gamma mode must be nonnegative, got {c.value}")
    if means and modes:
        m, o = means[0].value, modes[0].value
        if not m > o:
            raise NoSolutionError(f"gamma mean {m} must exceed its mode {o}")
        b = 1.0 / (m - o)
        return Gamma(m * b, b)
    lo, hi = SEARCH_BOUNDS
    if means:
        m = means[0].value
        return _solve_1d(lambda a: Gamma(a, a / m), others[0], lo, hi)
    if modes:
        o = modes[0].value
        if o == 0:
            raise NoSolutionError("a zero mode pins shape <= 1; give a mean instead")
        return _solve_1d(lambda a: Gamma(1.0 + a, a / o), others[0], lo, hi)
    qs = [c for c in others if isinstance(c, Quantile)]
    scale = qs[0].value if qs else others[0].hi
    return _newton_2d(Gamma, constraints, (2.0, 2.0 / max(scale, 1e-12)))


def _elicit_normal(constraints: Sequence[Constraint]) -> Distribution:
    anchors, others = _split(constraints)
    if len(anchors) == 2:
        raise DomainError("mean and mode coincide for the normal family; they are not independent")
    lo, hi = 1e-12, 1e12
    if anchors:
        mu = anchors[0].value
        target = others[0]
        spread = abs(target.value - mu) if isinstance(target, Quantile) else (target.hi - target.lo)
        spread = spread or 1.0
        # Precision scales like spread**-2, so search around that value.
        return _solve_1d(lambda lam: NormalPrecision(mu, lam), target, lo / spread**2, hi / spread**2)
    a, b = others
    if isinstance(a, Quantile) and isinstance(b, Quantile) and a.level != b.level:
        za = optimize.brentq(lambda z: norm_cdf(z) - a.level, -40, 40, xtol=1e-15)
        zb = optimize.brentq(lambda z: norm_cdf(z) - b.level, -40, 40, xtol=1e-15)
        sd = (b.value - a.value) / (zb - za)
        if not sd > 0:
            raise NoSolutionError("quantile statements are not increasing in level")
        return NormalPrecision(a.value - za * sd, 1.0 / sd**2)
    raise DomainError("normal elicitation needs a mean (or mode) or two quantiles")


_SOLVERS = {
    Family.BETA: _elicit_beta,
    Family.GAMMA: _elicit_gamma,
    Family.NORMAL_PRECISION: _elicit_normal,
}


def elicit(family: Family | str, constraints: Sequence[Constraint]) -> Distribution:
    """Find the member of ``family`` meeting every statement in ``constraints``.

    Exactly two constraints are required. The result satisfies each one to
    1e-4 in probability or 1e-6 relative for a mean or mode; otherwise
    :class:`NoSolutionError` is raised with the final residuals.
    """
    fam = Family(family)
    if fam not in _SOLVERS:
        raise DomainError(f"elicitation is available for Beta, Gamma and NormalPrecision, not {fam.value}")
    constraints = list(constraints)
    if len(constraints) != 2:
        raise DomainError(f"{fam.value} has 2 free parameters; got {len(constraints)} constraints")
    anchors, _ = _split(constraints)
    if len({type(c) for c in anchors}) != len(anchors):
        raise DomainError("duplicate mean or mode statements")
    log.debug("eliciting %s with bounds %s", fam.value, SEARCH_BOUNDS)
    d = _SOLVERS[fam](constraints)
    if not _satisfied(d, constraints):
        raise NoSolutionError(
            f"solution {d} misses constraints: residuals {residuals(d, constraints)}",
            residual=max(abs(r) for r in residuals(d, constraints)),
        )
    return d
