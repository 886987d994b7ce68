import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import digamma, gammaln

from bayesdec.conjugate import GridPrior, grid_posterior, grid_predictive
from bayesdec.distributions import Gamma, NormalPrecision
from bayesdec.errors import DomainError
from bayesdec.probvector import ProbVector
from bayesdec.scoring import (
    RuleKind,
    ScoreRule,
    best_normal_approx,
    binomial_poisson_discrepancy,
    exam_rule,
    expected_info_of_experiment,
    expected_score,
    info_of_data,
    log_discrepancy,
    score,
)


def simplex_grid(k: int, step: float):
    n = round(1 / step)
    for combo in itertools.product(range(n + 1), repeat=k - 1):
        if sum(combo) <= n:
            yield np.array(list(combo) + [n - sum(combo)], dtype=float) / n


class TestExamRule:
    rule = exam_rule(5)
    labels = ("A", "B", "C", "D", "E")

    def q(self, *w):
        return ProbVector(np.array(w, dtype=float), self.labels)

    def test_canonical_patterns(self):
        assert score(self.rule, self.q(1, 0, 0, 0, 0), "A") == pytest.approx(1.0, abs=1e-15)
        assert score(self.rule, self.q(0.2, 0.2, 0.2, 0.2, 0.2), "A") == pytest.approx(0.0, abs=1e-15)
        assert score(self.rule, self.q(0, 1, 0, 0, 0), "A") == pytest.approx(-1.5, abs=1e-15)
        assert score(self.rule, self.q(0.5, 0.5, 0, 0, 0), "A") == pytest.approx(0.375, abs=1e-15)

    def test_constants(self):
        assert self.rule.A == pytest.approx(1.25)
        assert self.rule.B == pytest.approx(-0.25)

    def test_needs_two_options(self):
        with pytest.raises(DomainError):
            exam_rule(1)


class TestProperness:
    @pytest.mark.parametrize(
        "rule",
        [ScoreRule(RuleKind.QUADRATIC), ScoreRule(RuleKind.LOGARITHMIC, 2.0, (0.1, -0.3, 0.0)), exam_rule(3)],
        ids=["quadratic", "logarithmic", "exam"],
    )
    def test_truth_maximizes_expected_score_on_simplex_grid(self, rule):
        grid = list(simplex_grid(3, 0.05))
        log_rule = rule.kind is RuleKind.LOGARITHMIC
        for p in grid:
            if log_rule and np.any(p == 0):
                continue
            honest = expected_score(rule, p, p)
            for q in grid:
                if log_rule and np.any(q[p > 0] == 0):
                    continue
                assert expected_score(rule, q, p) <= honest + 1e-12

    def test_logarithmic_loss_is_scaled_discrepancy(self):
        rule = ScoreRule(RuleKind.LOGARITHMIC, 2.5, 0.7)
        rng = np.random.default_rng(4)
        for _ in range(50):
            p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
            loss = expected_score(rule, p, p) - expected_score(rule, q, p)
            assert loss == pytest.approx(2.5 * float(stats.entropy(p, q)), abs=1e-10)

    def test_quadratic_forms_agree(self):
        # A {2 q_j - sum q_i^2} + B_j against A {1 - sum (q_i - [i = j])^2} + B_j.
        rule = ScoreRule(RuleKind.QUADRATIC, 1.7, (0.2, -0.1, 0.4))
        rng = np.random.default_rng(5)
        for q in rng.dirichlet(np.ones(3), 30):
            for j in range(3):
                other = 1.7 * (1.0 - np.sum((q - np.eye(3)[j]) ** 2)) + rule.B[j]
                assert score(rule, q, j) == pytest.approx(other, abs=1e-12)

    def test_strictness(self):
        rule = ScoreRule(RuleKind.QUADRATIC)
        p = np.array([0.2, 0.3, 0.5])
        assert expected_score(rule, [0.25, 0.3, 0.45], p) < expected_score(rule, p, p)

    def test_log_of_zero_probability(self):
        with pytest.raises(DomainError):
            score(ScoreRule(RuleKind.LOGARITHMIC), [1.0, 0.0], 1)

    def test_rule_validation(self):
        with pytest.raises(DomainError):
            ScoreRule(RuleKind.QUADRATIC, A=0.0)


class TestDiscrepancy:
    def test_discrete_against_scipy_entropy(self):
        p, q = [0.1, 0.6, 0.3], [0.3, 0.3, 0.4]
        assert log_discrepancy(p, q) == pytest.approx(stats.entropy(p, q), rel=1e-14)

    def test_half_half_against_quarter(self):
        assert log_discrepancy([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.1438410362, abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 8).flatmap(lambda k: st.tuples(
        st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
        st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
    )))
    def test_nonnegative_and_zero_iff_equal(self, pair):
        p = np.array(pair[0]) / sum(pair[0])
        q = np.array(pair[1]) / sum(pair[1])
        d = log_discrepancy(p, q)
        assert d >= 0.0
        assert log_discrepancy(p, p) == 0.0
        if np.max(np.abs(p - q)) > 1e-3:
            assert d > 0.0

    def test_symmetrized_discrepancy_breaks_triangle_inequality(self):
        def sym(a, b):
            return log_discrepancy(a, b) + log_discrepancy(b, a)

        p, m, q = [0.1, 0.9], [0.5, 0.5], [0.9, 0.1]
        assert sym(p, q) == pytest.approx(sym(q, p))
        assert sym(p, q) > sym(p, m) + sym(m, q)

    def test_support_mismatch(self):
        with pytest.raises(DomainError):
            log_discrepancy([0.5, 0.5], [1.0, 0.0])

    def test_continuous_normals_closed_form(self):
        p, q = NormalPrecision(0.0, 1.0), NormalPrecision(1.0, 0.25)
        s1, s2 = 1.0, 2.0
        closed = math.log(s2 / s1) + (s1**2 + 1.0) / (2 * s2**2) - 0.5
        assert log_discrepancy(p, q) == pytest.approx(closed, rel=1e-7)

    def test_continuous_gammas_closed_form(self):
        a1, b1, a2, b2 = 3.0, 2.0, 5.0, 1.5
        closed = (
            (a1 - a2) * digamma(a1) - gammaln(a1) + gammaln(a2)
            + a2 * (math.log(b1) - math.log(b2)) + a1 * (b2 - b1) / b1
        )
        assert log_discrepancy(Gamma(a1, b1), Gamma(a2, b2)) == pytest.approx(closed, rel=1e-7)


class TestBinomialPoisson:
    @pytest.mark.parametrize("n, theta", [(1, 0.3), (5, 0.1), (20, 0.5), (100, 0.05), (60, 0.9)])
    def test_matches_direct_kl(self, n, theta):
        k = np.arange(n + 1)
        p = stats.binom(n, theta).pmf(k)
        direct = float(np.sum(p * (stats.binom(n, theta).logpmf(k) - stats.poisson(n * theta).logpmf(k))))
        assert binomial_poisson_discrepancy(n, theta) == pytest.approx(direct, abs=1e-10)

    def test_monotone_on_fixed_grid(self):
        thetas = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5]
        ns = [1, 2, 5, 10, 20, 50, 100]
        table = np.array([[binomial_poisson_discrepancy(n, t) for t in thetas] for n in ns])
        assert np.all(np.diff(table, axis=0) < 0), "must decrease in n"
        assert np.all(np.diff(table, axis=1) > 0), "must increase with theta, so decrease as theta -> 0"

    def test_domain(self):
        with pytest.raises(DomainError):
            binomial_poisson_discrepancy(0, 0.5)
        with pytest.raises(DomainError):
            binomial_poisson_discrepancy(3, 1.0)


class TestNormalApproximation:
    def test_moment_matching_is_a_local_minimum(self):
        target = Gamma(4.0, 2.0)
        mean, var = target.moments()
        best = best_normal_approx(mean, var)
        d0 = log_discrepancy(target, best)
        for dm, dl in [(0.05, 0), (-0.05, 0), (0, 0.05), (0, -0.05)]:
            other = NormalPrecision(mean + dm, best.params[1] * (1 + dl))
            assert log_discrepancy(target, other) > d0

    def test_gamma_target_on_a_grid(self):
        target = Gamma(4.0, 2.0)
        best = best_normal_approx(2.0, 1.0)
        assert best.params == (2.0, 1.0)
        bounds = (target.quantile(1e-12), target.quantile(1 - 1e-12))
        grid = [(mu, lam) for mu in (1.9, 2.0, 2.1) for lam in (0.9, 1.0, 1.1)]
        vals = {g: log_discrepancy(target, NormalPrecision(*g), bounds=bounds) for g in grid}
        assert min(vals, key=vals.get) == (2.0, 1.0)

    def test_mixture_target(self):
        class Mixture:
            def logpdf(self, x):
                return math.log(0.5 * stats.norm.pdf(x, -1, 1) + 0.5 * stats.norm.pdf(x, 1, 1))

        best = best_normal_approx(0.0, 2.0)
        assert best.params == (0.0, 0.5)
        d0 = log_discrepancy(Mixture(), best, bounds=(-12, 12))
        for mu, lam in [(0.1, 0.5), (0.0, 0.45), (0.0, 0.55)]:
            assert log_discrepancy(Mixture(), NormalPrecision(mu, lam), bounds=(-12, 12)) > d0

    def test_rejects_zero_variance(self):
        with pytest.raises(DomainError):
            best_normal_approx(0.0, 0.0)


class TestInformation:
    prior = [0.375, 0.625]

    def test_coin_limits(self):
        assert info_of_data(self.prior, [0.25, 0.75]) == pytest.approx(0.03537489, abs=1e-6)
        assert info_of_data(self.prior, [0.5, 0.5]) == pytest.approx(0.03226926, abs=1e-6)

    def test_expected_information(self):
        got = expected_info_of_experiment(self.prior, [0.4, 0.6], [[0.25, 0.75], [0.5, 0.5]])
        assert got == pytest.approx(0.4 * 0.0353748906 + 0.6 * 0.0322692606, abs=1e-9)

    def test_one_toss_experiment(self):
        prior = GridPrior((0.5, 0.75), np.array([0.5, 0.5]))
        marg = grid_predictive(prior, "bernoulli")
        posts = [grid_posterior(prior, "bernoulli", [x]).weights for x in (0, 1)]
        direct = sum(
            marg[x] * sum(w * math.log(w / 0.5) for w in post) for x, post in zip((0, 1), posts)
        )
        got = expected_info_of_experiment([0.5, 0.5], [marg[0], marg[1]], posts)
        assert got == pytest.approx(direct, abs=1e-14)

    def test_refinement_carries_more_information(self):
        # Merging pairs of outcomes averages their posteriors and loses information.
        rng = np.random.default_rng(6)
        for _ in range(100):
            fine = rng.dirichlet(np.ones(3), 4)
            coarse = [(fine[0] + fine[1]) / 2, (fine[2] + fine[3]) / 2]
            prior = fine.mean(axis=0)
            fine_info = expected_info_of_experiment(prior, [0.25] * 4, list(fine))
            assert fine_info > expected_info_of_experiment(prior, [0.5, 0.5], coarse)

    def test_prior_must_be_positive(self):
        with pytest.raises(DomainError):
            info_of_data([1.0, 0.0], [0.5, 0.5])
