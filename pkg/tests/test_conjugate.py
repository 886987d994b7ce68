import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from bayesdec.conjugate import (
    ConjugateModel,
    GridPrior,
    Likelihood,
    NumericPredictive,
    SampleSummary,
    event_posterior,
    fair_stake,
    grid_posterior,
    grid_predictive,
    log_likelihood,
    posterior,
    posterior_predictive,
    prior_predictive,
)
from bayesdec.distributions import Beta, Family, Gamma, NormalGamma, NormalPrecision, Pareto
from bayesdec.errors import DomainError

# (model, data, scipy log-likelihood of one observation, scipy prior)
ONE_PARAM_CASES = {
    "bernoulli": (
        ConjugateModel(Likelihood.BERNOULLI, Beta(2.0, 3.0)),
        [1, 0, 1, 1, 0, 1],
        lambda x, t: stats.bernoulli(t).logpmf(x),
        stats.beta(2.0, 3.0),
    ),
    "binomial": (
        ConjugateModel(Likelihood.BINOMIAL, Beta(1.5, 1.5), trials=5),
        [2, 4, 1, 5],
        lambda x, t: stats.binom(5, t).logpmf(x),
        stats.beta(1.5, 1.5),
    ),
    "poisson": (
        ConjugateModel(Likelihood.POISSON, Gamma(3.0, 0.5)),
        [4, 7, 2, 5, 6],
        lambda x, t: stats.poisson(t).logpmf(x),
        stats.gamma(3.0, scale=2.0),
    ),
    "geometric": (
        ConjugateModel(Likelihood.GEOMETRIC, Beta(2.0, 2.0)),
        [0, 3, 1, 2],
        lambda x, t: stats.geom(t, loc=-1).logpmf(x),
        stats.beta(2.0, 2.0),
    ),
    "exponential": (
        ConjugateModel(Likelihood.EXPONENTIAL, Gamma(2.0, 1.0)),
        [0.3, 1.2, 0.7],
        lambda x, t: stats.expon(scale=1.0 / t).logpdf(x),
        stats.gamma(2.0, scale=1.0),
    ),
    "uniform": (
        ConjugateModel(Likelihood.UNIFORM, Pareto(2.0, 1.0)),
        [0.4, 1.7, 0.9],
        lambda x, t: stats.uniform(0, t).logpdf(x),
        stats.pareto(2.0, scale=1.0),
    ),
    "normal_known_precision": (
        ConjugateModel(Likelihood.NORMAL_KNOWN_PRECISION, NormalPrecision(0.0, 0.5), known=2.0),
        [0.8, 1.4, 0.3, 1.1],
        lambda x, t: stats.norm(t, 1 / math.sqrt(2.0)).logpdf(x),
        stats.norm(0.0, 1 / math.sqrt(0.5)),
    ),
    "normal_known_mean": (
        ConjugateModel(Likelihood.NORMAL_KNOWN_MEAN, Gamma(2.0, 1.0), known=1.0),
        [0.8, 1.4, 0.3, 1.9, 1.2],
        lambda x, t: stats.norm(1.0, 1 / math.sqrt(t)).logpdf(x),
        stats.gamma(2.0, scale=1.0),
    ),
}


def brute_force_posterior(data, loglik, prior):
    """Normalized posterior density by adaptive quadrature, from scipy primitives only."""
    lo, hi = prior.support()

    def unnorm(t):
        lp = sum(loglik(x, t) for x in data) + prior.logpdf(t)
        return math.exp(lp) if np.isfinite(lp) else 0.0

    cuts = sorted({float(prior.median()), float(max(data))} | {float(prior.ppf(q)) for q in (0.01, 0.99)})
    cuts = [c for c in cuts if lo < c < hi]
    edges = [lo] + cuts + [hi]
    z = sum(integrate.quad(unnorm, a, b, limit=400, epsrel=1e-11, epsabs=0)[0] for a, b in zip(edges, edges[1:]))
    return lambda t: unnorm(t) / z


class TestPosteriorAgainstQuadrature:
    @pytest.mark.parametrize("name", sorted(ONE_PARAM_CASES))
    def test_density_matches(self, name):
        model, data, loglik, prior = ONE_PARAM_CASES[name]
        post = posterior(model, SampleSummary.from_data(data))
        oracle = brute_force_posterior(data, loglik, prior)
        qs = [post.quantile(p) for p in (0.05, 0.3, 0.5, 0.7, 0.95)]
        np.testing.assert_allclose([post.pdf(t) for t in qs], [oracle(t) for t in qs], rtol=1e-6)

    def test_normal_both_unknown(self):
        # Posterior of (mu, lam) against a two-dimensional brute-force normalization.
        mu0, n0, a, b = 0.5, 2.0, 3.0, 2.0
        data = np.array([0.9, 1.7, 0.2, 1.3, 1.1])
        model = ConjugateModel(Likelihood.NORMAL, NormalGamma(mu0, n0, a, b))
        post = posterior(model, SampleSummary.from_data(data))

        n, sx, sxx = data.size, data.sum(), float(data @ data)

        def unnorm(lam, mu):
            # Written out by hand so the oracle shares no code with the library.
            lp = a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(lam) - b * lam
            lp += 0.5 * math.log(n0 * lam / (2 * math.pi)) - 0.5 * n0 * lam * (mu - mu0) ** 2
            lp += 0.5 * n * math.log(lam / (2 * math.pi)) - 0.5 * lam * (sxx - 2 * mu * sx + n * mu * mu)
            return math.exp(lp)

        z, _ = integrate.dblquad(unnorm, -4, 5, 1e-9, 15, epsrel=1e-8)
        for mu, lam in [(1.0, 1.5), (0.6, 0.8), (1.3, 3.0)]:
            assert post.pdf([mu, lam]) == pytest.approx(unnorm(lam, mu) / z, rel=1e-5)

    def test_empty_sample_returns_prior(self):
        model, *_ = ONE_PARAM_CASES["poisson"]
        assert posterior(model, SampleSummary()) == model.prior

    def test_closed_forms(self):
        assert posterior(ConjugateModel("bernoulli", Beta(1, 1)), SampleSummary.binary(10, 3)).params == (4.0, 8.0)
        post = posterior(ConjugateModel("poisson", Gamma(9.108, 0.01012)), SampleSummary.from_data([679, 703]))
        assert post.params[0] == pytest.approx(1391.108, abs=1e-9)
        assert post.params[1] == pytest.approx(2.01012, abs=1e-12)
        post = posterior(ConjugateModel("uniform", Pareto(2.0, 1.0)), SampleSummary.from_data([0.4, 1.7]))
        assert post.params == (4.0, 1.7)


def _random_data(lik: Likelihood, rng, n):
    if lik is Likelihood.BERNOULLI:
        return rng.integers(0, 2, n).tolist()
    if lik is Likelihood.BINOMIAL:
        return rng.integers(0, 6, n).tolist()
    if lik in (Likelihood.POISSON, Likelihood.GEOMETRIC):
        return rng.integers(0, 9, n).tolist()
    if lik in (Likelihood.EXPONENTIAL, Likelihood.UNIFORM):
        return rng.uniform(0.01, 3.0, n).tolist()
    return rng.normal(1.0, 1.0, n).tolist()


ALL_MODELS = [case[0] for case in ONE_PARAM_CASES.values()] + [
    ConjugateModel(Likelihood.NORMAL, NormalGamma(0.0, 1.0, 2.0, 2.0))
]


class TestClosure:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30), cut=st.floats(0.0, 1.0))
    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.likelihood.value)
    def test_sequential_equals_batch(self, model, seed, n, cut):
        rng = np.random.default_rng(seed)
        data = _random_data(model.likelihood, rng, n)
        k = int(cut * n)
        first, second = SampleSummary.from_data(data[:k]), SampleSummary.from_data(data[k:])
        batch = posterior(model, SampleSummary.from_data(data))
        step = posterior(model.with_prior(posterior(model, first)), second)
        assert batch.family is step.family is model.prior.family
        np.testing.assert_allclose(step.params, batch.params, rtol=1e-10, atol=1e-10)

    def test_summary_merge_matches_concatenation(self):
        a, b = SampleSummary.from_data([1.0, 2.0]), SampleSummary.from_data([5.0])
        assert a.merge(b) == SampleSummary.from_data([1.0, 2.0, 5.0])


class TestPredictive:
    def test_poisson_gamma_closed_form(self):
        model = ConjugateModel("poisson", Gamma(3.0, 0.5))
        pred = prior_predictive(model)
        assert pred.family is Family.POISSON_GAMMA
        ref = stats.nbinom(3.0, 0.5 / 1.5)
        np.testing.assert_allclose(pred.pdf(np.arange(20)), ref.pmf(np.arange(20)), rtol=1e-10)

    def test_bernoulli_beta(self):
        pred = posterior_predictive(ConjugateModel("bernoulli", Beta(2, 3)), SampleSummary.binary(4, 3))
        assert pred.pdf(1) == pytest.approx(5 / 9)

    @pytest.mark.parametrize(
        "model, ref",
        [
            (ConjugateModel("binomial", Beta(2.0, 3.0), trials=6), stats.betabinom(6, 2.0, 3.0).pmf),
            (
                ConjugateModel("exponential", Gamma(3.0, 2.0)),
                lambda x: 3.0 * 2.0**3 / (2.0 + x) ** 4,
            ),
            (
                ConjugateModel("normal_known_precision", NormalPrecision(1.0, 0.5), known=2.0),
                stats.norm(1.0, math.sqrt(1 / 0.5 + 1 / 2.0)).pdf,
            ),
            (
                ConjugateModel("normal_known_mean", Gamma(3.0, 2.0), known=0.5),
                stats.t(6.0, loc=0.5, scale=math.sqrt(2.0 / 3.0)).pdf,
            ),
            (
                ConjugateModel("normal", NormalGamma(0.5, 2.0, 3.0, 2.0)),
                stats.t(6.0, loc=0.5, scale=math.sqrt(2.0 * 3.0 / (3.0 * 2.0))).pdf,
            ),
            (
                ConjugateModel("uniform", Pareto(3.0, 1.0)),
                lambda x: 3.0 / (4.0 * 1.0) if x <= 1.0 else 3.0 * 1.0**3 / (4.0 * x**4),
            ),
        ],
        ids=["binomial", "exponential", "normal_known_precision", "normal_known_mean", "normal", "uniform"],
    )
    def test_numeric_predictive_matches_known_marginals(self, model, ref):
        pred = prior_predictive(model)
        assert isinstance(pred, NumericPredictive)
        xs = [0.0, 1.0, 2.0, 3.0] if pred.discrete else [0.2, 0.7, 1.5, 2.5]
        np.testing.assert_allclose([pred.pdf(x) for x in xs], [ref(x) for x in xs], rtol=1e-6)

    def test_geometric_predictive_is_beta_negative_binomial(self):
        a, b = 3.0, 2.0
        pred = prior_predictive(ConjugateModel("geometric", Beta(a, b)))
        k = np.arange(12)
        ref = np.exp(special.betaln(a + 1, b + k) - special.betaln(a, b))
        np.testing.assert_allclose([pred.pdf(v) for v in k], ref, rtol=1e-6)


class TestGrid:
    coin = GridPrior((0.5, 0.75), np.array([0.5, 0.5]))

    def test_coin_sequences(self):
        assert grid_posterior(self.coin, "bernoulli", [1]).weight(0.75) == pytest.approx(0.6, abs=1e-15)
        assert grid_posterior(self.coin, "bernoulli", [1, 0]).weight(0.75) == pytest.approx(3 / 7, abs=1e-15)

    def test_log_space_survives_long_sequences(self):
        data = [1] * 3000 + [0] * 1000
        post = grid_posterior(self.coin, "bernoulli", data)
        assert post.weight(0.75) == pytest.approx(1.0)
        assert np.all(np.isfinite(post.weights))

    def test_predictive(self):
        pred = grid_predictive(self.coin, "bernoulli")
        assert pred[1] == 0.625
        after = grid_predictive(grid_posterior(self.coin, "bernoulli", [1]), "bernoulli")
        assert after[1] == pytest.approx(0.65)
        assert fair_stake(after, 1.0) == pytest.approx(0.65 / 0.35)

    def test_unbounded_outcomes_get_a_residual(self):
        prior = GridPrior((1.0, 4.0), np.array([0.5, 0.5]))
        pred = grid_predictive(prior, "poisson", outcomes=[0, 1, 2])
        assert pred.labels[-1] == "rest"
        expected = 0.5 * (stats.poisson(1).pmf([0, 1, 2]) + stats.poisson(4).pmf([0, 1, 2]))
        np.testing.assert_allclose(pred.weights[:3], expected, rtol=1e-12)

    def test_callable_likelihood(self):
        post = grid_posterior(self.coin, lambda x, t: x * np.log(t) + (1 - x) * np.log1p(-t), [1, 1])
        assert post.weight(0.75) == pytest.approx(0.5625 / (0.5625 + 0.25))

    def test_impossible_data(self):
        prior = GridPrior((0.0, 1.0), np.array([0.5, 0.5]))
        with pytest.raises(DomainError):
            grid_posterior(prior, "bernoulli", [0, 1])


class TestEventPosterior:
    @settings(max_examples=100, deadline=None)
    @given(p=st.floats(0.0, 1.0), a=st.floats(0.01, 1.0), b=st.floats(0.01, 1.0))
    def test_agrees_with_joint_table(self, p, a, b):
        joint = np.array([[a * p, (1 - a) * p], [b * (1 - p), (1 - b) * (1 - p)]])
        assert event_posterior(p, a, b) == pytest.approx(joint[0, 0] / joint[:, 0].sum(), abs=1e-14)

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            event_posterior(1.2, 0.5, 0.5)


class TestValidation:
    def test_prior_family_must_match(self):
        with pytest.raises(DomainError):
            ConjugateModel("poisson", Beta(1, 1))

    def test_binomial_needs_trials(self):
        with pytest.raises(DomainError):
            ConjugateModel("binomial", Beta(1, 1))

    def test_too_many_successes(self):
        with pytest.raises(DomainError):
            posterior(ConjugateModel("bernoulli", Beta(1, 1)), SampleSummary(3, 4.0, 4.0, 2.0))

    def test_log_likelihood_matches_scipy(self):
        got = log_likelihood("poisson", 3.5, [2, 5, 3])
        assert got == pytest.approx(stats.poisson(3.5).logpmf([2, 5, 3]).sum(), rel=1e-12)
