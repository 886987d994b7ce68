"""Parametric families used as priors, posteriors and predictives.

A :class:`Distribution` is an immutable ``(family, params)`` pair. Per-family
behaviour lives in small private implementation classes looked up by tag, so
the public surface stays a handful of functions:

``density``, ``log_density``, ``cdf``, ``quantile``, ``moments`` and ``sample``.

Conventions worth stating up front:

* ``Gamma(alpha, beta)`` uses the *rate* ``beta`` (density proportional to
  ``lam**(alpha - 1) * exp(-beta * lam)``).
* ``NormalPrecision(mu, lam)`` is parameterized by precision ``lam = 1/variance``.
* ``Geometric(theta)`` counts failures before the first success,
  ``p(x) = theta * (1 - theta)**x`` on ``x = 0, 1, 2, ...``.
* ``ContinuousUniform(theta)`` is uniform on ``(0, theta)``.
* ``PoissonGamma(alpha, beta, n)`` is the Poisson-gamma mixture
  ``beta**alpha / Gamma(alpha) * Gamma(alpha + x) / x! * n**x / (beta + n)**(alpha + x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import ClassVar

import numpy as np

from . import _special as sp
from .errors import DomainError, MomentError, UnsupportedError

__all__ = [
    "Family",
    "Distribution",
    "Beta",
    "Gamma",
    "NormalPrecision",
    "Pareto",
    "Poisson",
    "Binomial",
    "Bernoulli",
    "Geometric",
    "ContinuousUniform",
    "PoissonGamma",
    "NormalGamma",
    "density",
    "log_density",
    "cdf",
    "quantile",
    "moments",
    "sample",
    "make_rng",
]


class Family(str, Enum):
    BETA = "Beta"
    GAMMA = "Gamma"
    NORMAL_PRECISION = "NormalPrecision"
    PARETO = "Pareto"
    POISSON = "Poisson"
    BINOMIAL = "Binomial"
    BERNOULLI = "Bernoulli"
    GEOMETRIC = "Geometric"
    CONTINUOUS_UNIFORM = "ContinuousUniform"
    POISSON_GAMMA = "PoissonGamma"
    NORMAL_GAMMA = "NormalGamma"


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used by every sampling routine."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _fmt(v: float) -> str:
    return format(v, ".10g")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")


def _positive(name: str, value: float) -> None:
    _check_finite(name, value)
    if value <= 0:
        raise DomainError(f"{name} must be > 0, got {value}")


def _unit_open(name: str, value: float) -> None:
    _check_finite(name, value)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")


def _integer_mask(x: np.ndarray) -> np.ndarray:
    return np.isfinite(x) & (x == np.floor(x))


def _gamma_variates(rng: np.random.Generator, shape: float, count: int) -> np.ndarray:
    """Unit-rate gamma draws by Marsaglia and Tsang's squeeze method."""
    if count == 0:
        return np.empty(0)
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = max(16, int(need * 1.1) + 8)
        z = rng.standard_normal(batch)
        u = rng.random(batch)
        v = (1.0 + c * z) ** 3
        ok = v > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = ok & (np.log(u) < 0.5 * z * z + d - d * v + d * np.log(np.where(ok, v, 1.0)))
        got = (d * v)[accept][:need]
        out[filled : filled + got.size] = got
        filled += got.size
    if boost:
        out *= rng.random(count) ** (1.0 / shape)
    return out


class _Impl:
    names: ClassVar[tuple[str, ...]]
    discrete: ClassVar[bool] = False

    def validate(self, p: tuple[float, ...]) -> None:
        raise NotImplementedError

    def logpdf(self, x: np.ndarray, p: tuple[float, ...]) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x: float, p: tuple[float, ...]) -> float:
        raise NotImplementedError

    def support(self, p: tuple[float, ...]) -> tuple[float, float]:
        raise NotImplementedError

    def moments(self, p: tuple[float, ...]):
        raise NotImplementedError

    def first_moment(self, p: tuple[float, ...]):
        return self.moments(p)[0]

    def mode(self, p: tuple[float, ...]) -> float | None:
        return None

    def sample(self, rng: np.random.Generator, count: int, d: "Distribution") -> np.ndarray:
        u = rng.random(count)
        return np.array([d.quantile(float(ui)) for ui in u]) if count else np.empty(0)


class _Beta(_Impl):
    names = ("alpha", "beta")

    def validate(self, p):
        _positive("alpha", p[0])
        _positive("beta", p[1])

    def logpdf(self, x, p):
        a, b = p
        out = np.full(x.shape, -np.inf)
        inside = (x > 0) & (x < 1)
        xi = x[inside]
        out[inside] = (a - 1) * np.log(xi) + (b - 1) * np.log1p(-xi) - sp.betaln(a, b)
        # Edge values where the density is finite and nonzero.
        for edge, expo_here in ((0.0, a), (1.0, b)):
            at = x == edge
            if np.any(at):
                if expo_here == 1.0:
                    out[at] = -sp.betaln(a, b)
                elif expo_here < 1.0:
                    out[at] = np.inf
        return out

    def cdf(self, x, p):
        return sp.betainc(p[0], p[1], min(max(x, 0.0), 1.0))

    def support(self, p):
        return (0.0, 1.0)

    def moments(self, p):
        a, b = p
        s = a + b
        return a / s, a * b / (s * s * (s + 1.0))

    def mode(self, p):
        a, b = p
        if a > 1 and b > 1:
            return (a - 1) / (a + b - 2)
        if a <= 1 < b or (a < 1 and b == 1):
            return 0.0
        if b <= 1 < a or (b < 1 and a == 1):
            return 1.0
        return None

    def sample(self, rng, count, d):
        x = _gamma_variates(rng, d.params[0], count)
        y = _gamma_variates(rng, d.params[1], count)
        return x / (x + y)


class _Gamma(_Impl):
    names = ("alpha", "beta")

    def validate(self, p):
        _positive("alpha", p[0])
        _positive("beta", p[1])

    def logpdf(self, x, p):
        a, b = p
        out = np.full(x.shape, -np.inf)
        inside = x > 0
        xi = x[inside]
        out[inside] = a * math.log(b) - sp.gammaln(a) + (a - 1) * np.log(xi) - b * xi
        at0 = x == 0
        if np.any(at0):
            if a == 1.0:
                out[at0] = math.log(b)
            elif a < 1.0:
                out[at0] = np.inf
        return out

    def cdf(self, x, p):
        return sp.gammainc(p[0], p[1] * x) if x > 0 else 0.0

    def support(self, p):
        return (0.0, math.inf)

    def moments(self, p):
        a, b = p
        return a / b, a / (b * b)

    def mode(self, p):
        a, b = p
        return (a - 1) / b if a >= 1 else 0.0

    def sample(self, rng, count, d):
        return _gamma_variates(rng, d.params[0], count) / d.params[1]


class _NormalPrecision(_Impl):
    names = ("mu", "lam")

    def validate(self, p):
        _check_finite("mu", p[0])
        _positive("lam", p[1])

    def logpdf(self, x, p):
        mu, lam = p
        return 0.5 * math.log(lam / (2 * math.pi)) - 0.5 * lam * (x - mu) ** 2

    def cdf(self, x, p):
        mu, lam = p
        return sp.norm_cdf((x - mu) * math.sqrt(lam))

    def support(self, p):
        return (-math.inf, math.inf)

    def moments(self, p):
        return p[0], 1.0 / p[1]

    def mode(self, p):
        return p[0]

    def sample(self, rng, count, d):
        mu, lam = d.params
        return mu + rng.standard_normal(count) / math.sqrt(lam)


class _Pareto(_Impl):
    names = ("alpha", "beta")

    def validate(self, p):
        _positive("alpha", p[0])
        _positive("beta", p[1])

    def logpdf(self, x, p):
        a, b = p
        out = np.full(x.shape, -np.inf)
        inside = x >= b
        out[inside] = math.log(a) + a * math.log(b) - (a + 1) * np.log(x[inside])
        return out

    def cdf(self, x, p):
        a, b = p
        return 0.0 if x <= b else -math.expm1(a * math.log(b / x))

    def support(self, p):
        return (p[1], math.inf)

    def moments(self, p):
        a, b = p
        if a <= 1:
            raise MomentError(f"Pareto mean requires alpha > 1 (alpha={a})")
        mean = a * b / (a - 1)
        if a <= 2:
            raise MomentError(f"Pareto variance requires alpha > 2 (alpha={a})")
        return mean, b * b * a / ((a - 1) ** 2 * (a - 2))

    def first_moment(self, p):
        a, b = p
        if a <= 1:
            raise MomentError(f"Pareto mean requires alpha > 1 (alpha={a})")
        return a * b / (a - 1)

    def mode(self, p):
        return p[1]

    def sample(self, rng, count, d):
        a, b = d.params
        return b * (1.0 - rng.random(count)) ** (-1.0 / a)


class _ContinuousUniform(_Impl):
    names = ("theta",)

    def validate(self, p):
        _positive("theta", p[0])

    def logpdf(self, x, p):
        (t,) = p
        out = np.full(x.shape, -np.inf)
        out[(x >= 0) & (x <= t)] = -math.log(t)
        return out

    def cdf(self, x, p):
        return min(max(x / p[0], 0.0), 1.0)

    def support(self, p):
        return (0.0, p[0])

    def moments(self, p):
        (t,) = p
        return t / 2.0, t * t / 12.0

    def sample(self, rng, count, d):
        return d.params[0] * rng.random(count)


class _Discrete(_Impl):
    discrete = True

    def _logpmf(self, k: np.ndarray, p) -> np.ndarray:
        raise NotImplementedError

    def logpdf(self, x, p):
        out = np.full(x.shape, -np.inf)
        lo, hi = self.support(p)
        ok = _integer_mask(x) & (x >= lo) & (x <= hi)
        if np.any(ok):
            out[ok] = self._logpmf(x[ok], p)
        return out

    def sample(self, rng, count, d):
        if count == 0:
            return np.empty(0)
        lo, hi = self.support(d.params)
        top = hi if math.isfinite(hi) else d.quantile(1.0 - 1e-12)
        ks = np.arange(lo, top + 1.0)
        table = np.cumsum(np.exp(self._logpmf(ks, d.params)))
        u = rng.random(count)
        idx = np.searchsorted(table, u, side="left")
        out = np.empty(count)
        inside = idx < ks.size
        out[inside] = ks[idx[inside]]
        for i in np.flatnonzero(~inside):
            out[i] = d.quantile(float(u[i]))
        return out


class _Poisson(_Discrete):
    names = ("lam",)

    def validate(self, p):
        _positive("lam", p[0])

    def _logpmf(self, k, p):
        (lam,) = p
        return k * math.log(lam) - lam - sp.gammaln(k + 1.0)

    def cdf(self, x, p):
        if x < 0:
            return 0.0
        return sp.gammaincc(math.floor(x) + 1.0, p[0])

    def support(self, p):
        return (0.0, math.inf)

    def moments(self, p):
        return p[0], p[0]


class _Binomial(_Discrete):
    names = ("m", "theta")

    def validate(self, p):
        m, t = p
        _check_finite("m", m)
        if m < 1 or m != math.floor(m):
            raise DomainError(f"m must be a positive integer, got {m}")
        _unit_open("theta", t)

    def _logpmf(self, k, p):
        m, t = p
        return (
            sp.gammaln(m + 1.0)
            - sp.gammaln(k + 1.0)
            - sp.gammaln(m - k + 1.0)
            + k * math.log(t)
            + (m - k) * math.log1p(-t)
        )

    def cdf(self, x, p):
        m, t = p
        if x < 0:
            return 0.0
        k = math.floor(x)
        if k >= m:
            return 1.0
        return sp.betainc(m - k, k + 1.0, 1.0 - t)

    def support(self, p):
        return (0.0, p[0])

    def moments(self, p):
        m, t = p
        return m * t, m * t * (1 - t)


class _Bernoulli(_Discrete):
    names = ("theta",)

    def validate(self, p):
        _unit_open("theta", p[0])

    def _logpmf(self, k, p):
        (t,) = p
        return k * math.log(t) + (1 - k) * math.log1p(-t)

    def cdf(self, x, p):
        if x < 0:
            return 0.0
        return 1.0 - p[0] if x < 1 else 1.0

    def support(self, p):
        return (0.0, 1.0)

    def moments(self, p):
        (t,) = p
        return t, t * (1 - t)


class _Geometric(_Discrete):
    names = ("theta",)

    def validate(self, p):
        _unit_open("theta", p[0])

    def _logpmf(self, k, p):
        (t,) = p
        return math.log(t) + k * math.log1p(-t)

    def cdf(self, x, p):
        if x < 0:
            return 0.0
        return -math.expm1((math.floor(x) + 1.0) * math.log1p(-p[0]))

    def support(self, p):
        return (0.0, math.inf)

    def moments(self, p):
        (t,) = p
        return (1 - t) / t, (1 - t) / (t * t)


class _PoissonGamma(_Discrete):
    names = ("alpha", "beta", "n")

    def validate(self, p):
        for name, v in zip(self.names, p):
            _positive(name, v)

    def _logpmf(self, k, p):
        a, b, n = p
        return (
            a * math.log(b)
            - sp.gammaln(a)
            + sp.gammaln(a + k)
            - sp.gammaln(k + 1.0)
            + k * math.log(n)
            - (a + k) * math.log(b + n)
        )

    def cdf(self, x, p):
        a, b, n = p
        if x < 0:
            return 0.0
        return sp.betainc(a, math.floor(x) + 1.0, b / (b + n))

    def support(self, p):
        return (0.0, math.inf)

    def moments(self, p):
        a, b, n = p
        mean = n * a / b
        return mean, mean * (1.0 + n / b)


class _NormalGamma(_Impl):
    names = ("mu0", "n0", "alpha", "beta")

    def validate(self, p):
        _check_finite("mu0", p[0])
        for name, v in zip(self.names[1:], p[1:]):
            _positive(name, v)

    def logpdf(self, x, p):
        mu0, n0, a, b = p
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (2,):
            raise DomainError("NormalGamma density takes (mu, lam) pairs")
        mu, lam = x[..., 0], x[..., 1]
        out = np.full(mu.shape, -np.inf)
        ok = lam > 0
        lm = lam[ok]
        out[ok] = (
            0.5 * np.log(n0 * lm / (2 * math.pi))
            - 0.5 * n0 * lm * (mu[ok] - mu0) ** 2
            + a * math.log(b)
            - sp.gammaln(a)
            + (a - 1) * np.log(lm)
            - b * lm
        )
        return out

    def cdf(self, x, p):
        raise UnsupportedError("NormalGamma has no univariate distribution function")

    def support(self, p):
        raise UnsupportedError("NormalGamma support is the half-plane lam > 0")

    def moments(self, p):
        mu0, n0, a, b = p
        if a <= 1:
            raise MomentError(f"NormalGamma variance of mu requires alpha > 1 (alpha={a})")
        return np.array([mu0, a / b]), np.array([b / (n0 * (a - 1)), a / (b * b)])

    def sample(self, rng, count, d):
        mu0, n0, a, b = d.params
        lam = _gamma_variates(rng, a, count) / b
        mu = mu0 + rng.standard_normal(count) / np.sqrt(n0 * lam)
        return np.column_stack([mu, lam]) if count else np.empty((0, 2))


_IMPLS: dict[Family, _Impl] = {
    Family.BETA: _Beta(),
    Family.GAMMA: _Gamma(),
    Family.NORMAL_PRECISION: _NormalPrecision(),
    Family.PARETO: _Pareto(),
    Family.POISSON: _Poisson(),
    Family.BINOMIAL: _Binomial(),
    Family.BERNOULLI: _Bernoulli(),
    Family.GEOMETRIC: _Geometric(),
    Family.CONTINUOUS_UNIFORM: _ContinuousUniform(),
    Family.POISSON_GAMMA: _PoissonGamma(),
    Family.NORMAL_GAMMA: _NormalGamma(),
}


@dataclass(frozen=True)
class Distribution:
    """An immutable member of one of the supported parametric families."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        params = tuple(float(v) for v in self.params)
        impl = _IMPLS[fam]
        if len(params) != len(impl.names):
            raise DomainError(f"{fam.value} takes {len(impl.names)} parameters, got {len(params)}")
        impl.validate(params)
        object.__setattr__(self, "params", params)

    @property
    def _impl(self) -> _Impl:
        return _IMPLS[self.family]

    @property
    def discrete(self) -> bool:
        return self._impl.discrete

    @property
    def param_names(self) -> tuple[str, ...]:
        return self._impl.names

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.param_names, self.params))

    def __str__(self) -> str:
        return f"{self.family.value}({', '.join(_fmt(v) for v in self.params)})"

    def support(self) -> tuple[float, float]:
        return self._impl.support(self.params)

    def mode(self) -> float | None:
        """Location of the density maximum, or ``None`` if not unique."""
        return self._impl.mode(self.params)

    def logpdf(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(np.isnan(arr)):
            raise DomainError("density evaluated at NaN")
        out = self._impl.logpdf(np.atleast_1d(arr).astype(float), self.params)
        if self.family is Family.NORMAL_GAMMA:
            return out if arr.ndim > 1 else float(out)
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def pdf(self, x):
        lp = self.logpdf(x)
        return np.exp(lp) if isinstance(lp, np.ndarray) else math.exp(lp)

    def cdf(self, x: float) -> float:
        x = float(x)
        if math.isnan(x):
            raise DomainError("cdf evaluated at NaN")
        if x == math.inf:
            return 1.0
        if x == -math.inf:
            return 0.0
        return min(max(self._impl.cdf(x, self.params), 0.0), 1.0)

    def sf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def moments(self):
        return self._impl.moments(self.params)

    @property
    def mean(self):
        return self._impl.first_moment(self.params)

    @property
    def var(self):
        return self.moments()[1]

    def quantile(self, p: float) -> float:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p}")
        if self.family is Family.NORMAL_GAMMA:
            raise UnsupportedError("NormalGamma has no univariate quantile")
        if self.discrete:
            return self._discrete_quantile(p)
        return self._continuous_quantile(p)

    def _discrete_quantile(self, p: float) -> float:
        lo, hi = self.support()
        if self.cdf(lo) >= p:
            return lo
        # Exponential search for an upper bracket, then integer bisection.
        step = 1.0
        right = lo + step
        while right < hi and self.cdf(right) < p:
            lo = right
            step *= 2.0
            right = lo + step
        right = min(right, hi)
        left = lo  # cdf(left) < p <= cdf(right)
        while right - left > 1:
            mid = math.floor((left + right) / 2)
            if self.cdf(mid) >= p:
                right = mid
            else:
                left = mid
        return float(right)

    def _continuous_quantile(self, p: float) -> float:
        lo, hi = self.support()
        if not math.isfinite(lo) or not math.isfinite(hi):
            try:
                center, var = self.moments()
                scale = math.sqrt(var)
            except MomentError:
                center, scale = (self.mode() or 0.0), 1.0
            if not math.isfinite(lo):
                lo = center - scale
                while self.cdf(lo) > p:
                    lo = center - 2.0 * (center - lo)
            if not math.isfinite(hi):
                hi = max(center, lo) + scale
                while self.cdf(hi) < p:
                    hi = lo + 2.0 * (hi - lo)
        # Safeguarded Newton: take the Newton step when it stays inside the
        # bracket, otherwise bisect.
        x = 0.5 * (lo + hi)
        for _ in range(400):
            f = self.cdf(x) - p
            if f == 0.0:
                return x
            if f > 0:
                hi = x
            else:
                lo = x
            dens = self.pdf(x)
            newton = x - f / dens if dens > 0 and math.isfinite(dens) else math.nan
            nxt = newton if lo < newton < hi else 0.5 * (lo + hi)
            if abs(nxt - x) <= 1e-15 * max(1.0, abs(x)) or hi - lo <= 4e-16 * max(1.0, abs(x)):
                return nxt
            x = nxt
        return x

    def sample(self, count: int, seed: int) -> np.ndarray:
        if count < 0:
            raise DomainError("sample count must be >= 0")
        return self._impl.sample(make_rng(seed), int(count), self)


def Beta(alpha: float, beta: float) -> Distribution:
    return Distribution(Family.BETA, (alpha, beta))


def Gamma(alpha: float, beta: float) -> Distribution:
    """Gamma with shape ``alpha`` and rate ``beta``."""
    return Distribution(Family.GAMMA, (alpha, beta))


def NormalPrecision(mu: float, lam: float) -> Distribution:
    return Distribution(Family.NORMAL_PRECISION, (mu, lam))


def Pareto(alpha: float, beta: float) -> Distribution:
    """Pareto with shape ``alpha`` and lower bound ``beta``."""
    return Distribution(Family.PARETO, (alpha, beta))


def Poisson(lam: float) -> Distribution:
    return Distribution(Family.POISSON, (lam,))


def Binomial(m: int, theta: float) -> Distribution:
    return Distribution(Family.BINOMIAL, (m, theta))


def Bernoulli(theta: float) -> Distribution:
    return Distribution(Family.BERNOULLI, (theta,))


def Geometric(theta: float) -> Distribution:
    return Distribution(Family.GEOMETRIC, (theta,))


def ContinuousUniform(theta: float) -> Distribution:
    return Distribution(Family.CONTINUOUS_UNIFORM, (theta,))


def PoissonGamma(alpha: float, beta: float, n: float) -> Distribution:
    return Distribution(Family.POISSON_GAMMA, (alpha, beta, n))


def NormalGamma(mu0: float, n0: float, alpha: float, beta: float) -> Distribution:
    return Distribution(Family.NORMAL_GAMMA, (mu0, n0, alpha, beta))


def density(d: Distribution, x):
    """Probability density (or mass) of ``d`` at ``x``; zero off the support."""
    return d.pdf(x)


def log_density(d: Distribution, x):
    return d.logpdf(x)


def cdf(d: Distribution, x: float) -> float:
    return d.cdf(x)


def quantile(d: Distribution, p: float) -> float:
    """Inverse distribution function; for discrete families the smallest ``x`` with ``cdf(x) >= p``."""
    return d.quantile(p)


def moments(d: Distribution):
    """Closed-form ``(mean, variance)``. Raises :class:`MomentError` if either does not exist."""
    return d.moments()


def sample(d: Distribution, count: int, seed: int) -> np.ndarray:
    """``count`` draws from ``d``; identical for identical ``seed``."""
    return d.sample(count, seed)
