import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from bayesdec.distributions import (
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
    make_rng,
)
from bayesdec.errors import DomainError, MomentError, UnsupportedError


def scipy_twin(d: Distribution):
    """Independent reference law for each family."""
    p = d.params
    f = d.family
    if f is Family.BETA:
        return stats.beta(p[0], p[1])
    if f is Family.GAMMA:
        return stats.gamma(p[0], scale=1.0 / p[1])
    if f is Family.NORMAL_PRECISION:
        return stats.norm(p[0], 1.0 / math.sqrt(p[1]))
    if f is Family.PARETO:
        return stats.pareto(p[0], scale=p[1])
    if f is Family.POISSON:
        return stats.poisson(p[0])
    if f is Family.BINOMIAL:
        return stats.binom(int(p[0]), p[1])
    if f is Family.BERNOULLI:
        return stats.bernoulli(p[0])
    if f is Family.GEOMETRIC:
        return stats.geom(p[0], loc=-1)
    if f is Family.CONTINUOUS_UNIFORM:
        return stats.uniform(0.0, p[0])
    if f is Family.POISSON_GAMMA:
        a, b, n = p
        return stats.nbinom(a, b / (b + n))
    raise AssertionError(f)


CONTINUOUS = [
    Beta(2.5, 7.0),
    Beta(0.5, 0.5),
    Beta(193.0818, 1952.2712),
    Gamma(9.108, 0.01012),
    Gamma(1391.108, 2.01012),
    Gamma(0.7, 3.0),
    NormalPrecision(-1.5, 4.0),
    Pareto(3.0, 2.0),
    ContinuousUniform(4.0),
]
DISCRETE = [
    Poisson(3.2),
    Binomial(12, 0.3),
    Bernoulli(0.625),
    Geometric(0.35),
    PoissonGamma(1391.108, 2.01012, 1.0),
    PoissonGamma(2.0, 0.5, 3.0),
]


@pytest.mark.parametrize("d", CONTINUOUS, ids=str)
class TestContinuousAgainstScipy:
    def test_density_and_cdf(self, d):
        ref = scipy_twin(d)
        x = ref.ppf(np.linspace(0.001, 0.999, 57))
        np.testing.assert_allclose(d.logpdf(x), ref.logpdf(x), rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose([d.cdf(v) for v in x], ref.cdf(x), rtol=0, atol=1e-11)

    def test_quantile(self, d):
        ref = scipy_twin(d)
        for p in (1e-6, 0.025, 0.5, 0.975, 1 - 1e-6):
            assert d.quantile(p) == pytest.approx(ref.ppf(p), rel=1e-9, abs=1e-12)

    def test_moments(self, d):
        ref = scipy_twin(d)
        mean, var = d.moments()
        assert mean == pytest.approx(ref.mean(), rel=1e-12)
        assert var == pytest.approx(ref.var(), rel=1e-12)

    def test_samples_follow_the_law(self, d):
        draws = d.sample(4000, seed=7)
        assert stats.kstest(draws, scipy_twin(d).cdf).pvalue > 1e-3


@pytest.mark.parametrize("d", DISCRETE, ids=str)
class TestDiscreteAgainstScipy:
    def test_pmf_and_cdf(self, d):
        ref = scipy_twin(d)
        lo, hi = ref.ppf(1e-6), ref.ppf(1 - 1e-6)
        k = np.arange(lo, hi + 1)
        np.testing.assert_allclose(d.pdf(k), ref.pmf(k), rtol=1e-9, atol=1e-14)
        np.testing.assert_allclose([d.cdf(v) for v in k], ref.cdf(k), atol=1e-10)

    def test_non_integers_have_zero_mass(self, d):
        assert d.pdf(0.5) == 0.0
        assert d.pdf(-1.0) == 0.0

    def test_quantile(self, d):
        ref = scipy_twin(d)
        for p in (0.01, 0.3, 0.5, 0.9, 0.999):
            assert d.quantile(p) == ref.ppf(p)

    def test_moments(self, d):
        ref = scipy_twin(d)
        mean, var = d.moments()
        assert mean == pytest.approx(ref.mean(), rel=1e-12)
        assert var == pytest.approx(ref.var(), rel=1e-12)

    def test_sample_mean(self, d):
        draws = d.sample(20000, seed=3)
        mean, var = d.moments()
        assert abs(draws.mean() - mean) < 5 * math.sqrt(var / draws.size)
        assert np.all(draws == np.round(draws))


class TestSampling:
    def test_same_seed_same_draws(self):
        d = Gamma(2.0, 3.0)
        np.testing.assert_array_equal(d.sample(50, seed=42), d.sample(50, seed=42))

    def test_different_seed_different_draws(self):
        d = Beta(2.0, 3.0)
        assert not np.array_equal(d.sample(50, seed=1), d.sample(50, seed=2))

    def test_rng_is_counter_based_and_reproducible(self):
        a = make_rng(42).random(5)
        b = make_rng(42).random(5)
        np.testing.assert_array_equal(a, b)
        assert isinstance(make_rng(0).bit_generator, np.random.Philox)

    def test_zero_count(self):
        assert Poisson(2.0).sample(0, seed=1).size == 0

    def test_negative_count_rejected(self):
        with pytest.raises(DomainError):
            Poisson(2.0).sample(-1, seed=1)


class TestValidation:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: Beta(0.0, 1.0),
            lambda: Gamma(1.0, -2.0),
            lambda: NormalPrecision(0.0, 0.0),
            lambda: Pareto(1.0, 0.0),
            lambda: Poisson(-1.0),
            lambda: Binomial(2.5, 0.3),
            lambda: Bernoulli(1.5),
            lambda: Geometric(0.0),
            lambda: ContinuousUniform(-1.0),
            lambda: NormalGamma(0.0, 1.0, 0.0, 1.0),
            lambda: Gamma(float("nan"), 1.0),
        ],
    )
    def test_bad_parameters(self, build):
        with pytest.raises(DomainError):
            build()

    def test_wrong_arity(self):
        with pytest.raises(DomainError):
            Distribution(Family.BETA, (1.0,))

    def test_quantile_level_must_be_open_unit(self):
        with pytest.raises(DomainError):
            Gamma(1.0, 1.0).quantile(1.0)

    def test_pareto_moments(self):
        with pytest.raises(MomentError):
            Pareto(0.8, 1.0).moments()
        with pytest.raises(MomentError):
            Pareto(1.5, 1.0).moments()
        assert Pareto(1.5, 1.0).mean == pytest.approx(3.0)

    def test_str_is_compact(self):
        assert str(Gamma(1391.108, 2.01012)) == "Gamma(1391.108, 2.01012)"


class TestNormalGamma:
    d = NormalGamma(1.0, 2.0, 3.0, 4.0)

    def test_density_factorizes(self):
        mu, lam = 0.4, 0.9
        ref = stats.gamma(3.0, scale=0.25).logpdf(lam) + stats.norm(1.0, 1 / math.sqrt(2.0 * lam)).logpdf(mu)
        assert self.d.logpdf([mu, lam]) == pytest.approx(ref, rel=1e-12)

    def test_marginal_of_mu_is_student(self):
        # mu ~ t_{2a}(mu0, b / (a n0))
        ref = stats.t(6.0, loc=1.0, scale=math.sqrt(4.0 / (3.0 * 2.0)))
        mean, var = self.d.moments()
        assert mean[0] == pytest.approx(ref.mean())
        assert var[0] == pytest.approx(ref.var(), rel=1e-12)
        draws = self.d.sample(4000, seed=5)
        assert draws.shape == (4000, 2)
        assert stats.kstest(draws[:, 0], ref.cdf).pvalue > 1e-3

    def test_no_univariate_cdf(self):
        with pytest.raises(UnsupportedError):
            self.d.cdf(0.0)
        with pytest.raises(UnsupportedError):
            self.d.quantile(0.5)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(0.3, 500.0), b=st.floats(0.3, 500.0), p=st.floats(0.001, 0.999))
    def test_beta_quantile_inverts_cdf(self, a, b, p):
        d = Beta(a, b)
        assert d.cdf(d.quantile(p)) == pytest.approx(p, abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(0.3, 2000.0), b=st.floats(1e-3, 100.0), p=st.floats(0.001, 0.999))
    def test_gamma_quantile_inverts_cdf(self, a, b, p):
        d = Gamma(a, b)
        assert d.cdf(d.quantile(p)) == pytest.approx(p, abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(0.01, 400.0), p=st.floats(0.001, 0.999))
    def test_discrete_quantile_is_smallest_with_cdf_at_least_p(self, lam, p):
        d = Poisson(lam)
        q = d.quantile(p)
        assert d.cdf(q) >= p
        assert q == 0 or d.cdf(q - 1) < p

    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(0.5, 50.0), b=st.floats(0.5, 50.0))
    def test_cdf_is_monotone_with_limits(self, a, b):
        d = Beta(a, b)
        xs = np.linspace(0, 1, 101)
        c = np.array([d.cdf(x) for x in xs])
        assert c[0] == 0.0 and c[-1] == 1.0
        assert np.all(np.diff(c) >= -1e-15)

    def test_density_consistent_with_cdf(self):
        d = Gamma(9.108, 0.01012)
        for x in (200.0, 900.0, 2000.0):
            h = 1e-5 * x
            deriv = (d.cdf(x + h) - d.cdf(x - h)) / (2 * h)
            assert deriv == pytest.approx(d.pdf(x), rel=1e-6)
