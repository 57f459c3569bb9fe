import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import binom_tail_exact, hyper_tails_enumerated
from sampled_hr.core import CatalogSpec
from sampled_hr.dist import (
    beta_fn,
    binom_tail_prob,
    hoeffding_population_bound,
    hyper_tail_prob,
    log_beta,
    log_comb,
    log_gamma,
    tail_matrix,
)
from sampled_hr.errors import DomainError


class TestLogGamma:
    def test_integer_points(self):
        assert log_gamma(1) == 0.0
        assert log_gamma(2) == 0.0
        assert log_gamma(5) == pytest.approx(math.log(24), rel=1e-14)

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.5, 7.25, 123.4, 9.9e3, 1e6])
    def test_against_mpmath(self, x):
        import mpmath

        with mpmath.workdps(40):
            ref = float(mpmath.loggamma(x))
        assert log_gamma(x) == pytest.approx(ref, rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("x", [0, -1, -0.5])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            log_gamma(x)


class TestBeta:
    @pytest.mark.parametrize("n", [1, 2, 10, 1000])
    def test_first_argument_one(self, n):
        assert beta_fn(1, n) == pytest.approx(1 / n, rel=1e-10)

    def test_values(self):
        assert beta_fn(2, 3) == pytest.approx(1 / 12, rel=1e-10)
        assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-10)

    @pytest.mark.parametrize("args", [(0, 1), (1, 0), (-1, 2)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            beta_fn(*args)

    @pytest.mark.parametrize("a", [0.2, 0.5, 1, 2])
    @pytest.mark.parametrize("n", [10, 100])
    def test_bernstein_sum_identity(self, a, n):
        """sum_k C(n-1, k) B(a + k, n - k) = 1/a."""
        terms = [math.exp(float(log_comb(n - 1, k)) + log_beta(a + k, n - k)) for k in range(n)]
        assert math.fsum(terms) == pytest.approx(1 / a, rel=1e-9)


class TestBinomialTail:
    def test_examples(self):
        assert binom_tail_prob(1, 1, CatalogSpec(10, 4)) == 1.0
        assert binom_tail_prob(5, 3, CatalogSpec(3706, 100)) == 1.0
        assert binom_tail_prob(1, 3, CatalogSpec(5, 3)) == pytest.approx(0.25, abs=1e-15)

    def test_rank_N_full_sample(self):
        cat = CatalogSpec(5, 3)
        assert binom_tail_prob(1, 5, cat) == 0.0
        assert binom_tail_prob(3, 5, cat) == 1.0

    @pytest.mark.parametrize("args", [(0, 1), (4, 1), (1, 0), (1, 6)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            binom_tail_prob(*args, CatalogSpec(5, 3))

    @pytest.mark.parametrize("N,n", [(7, 3), (12, 12), (20, 9)])
    def test_matches_exact_rationals(self, N, n):
        cat = CatalogSpec(N, n)
        for R in range(1, N + 1):
            for k in range(1, n + 1):
                exact = float(binom_tail_exact(k, R, N, n))
                assert abs(binom_tail_prob(k, R, cat) - exact) <= 1e-12

    def test_no_underflow_at_large_n(self):
        cat = CatalogSpec(139331, 1000)
        v = binom_tail_prob(500, 70000, cat)
        assert 0.0 <= v <= 1.0 and math.isfinite(v)
        # median of Binomial(999, ~0.5) sits near 500
        assert 0.3 < v < 0.7


class TestHypergeometricTail:
    def test_examples(self):
        assert hyper_tail_prob(1, 1, CatalogSpec(9, 4)) == 1.0
        assert hyper_tail_prob(1, 3, CatalogSpec(5, 3)) == pytest.approx(1 / 6, abs=1e-15)
        cat = CatalogSpec(30, 7)
        for R in range(1, 31):
            assert hyper_tail_prob(7, R, cat) == 1.0

    @pytest.mark.parametrize("N,n", [(5, 3), (9, 4), (12, 6), (12, 12)])
    def test_matches_enumeration(self, N, n):
        cat = CatalogSpec(N, n)
        for R in range(1, N + 1):
            exact = hyper_tails_enumerated(R, N, n)
            for k in range(1, n + 1):
                assert hyper_tail_prob(k, R, cat) == pytest.approx(float(exact[k - 1]), abs=1e-12)

    def test_full_sample_is_deterministic(self):
        """With n = N every item is drawn, so r = R."""
        cat = CatalogSpec(15, 15)
        for R in range(1, 16):
            for k in range(1, 16):
                assert hyper_tail_prob(k, R, cat) == pytest.approx(1.0 if R <= k else 0.0, abs=1e-12)


@pytest.mark.parametrize("kind,scalar", [("binom", binom_tail_prob), ("hyper", hyper_tail_prob)])
@pytest.mark.parametrize("N,n", [(12, 5), (50, 45), (3706, 100)])
def test_tail_matrix_matches_scalar(kind, scalar, N, n):
    cat = CatalogSpec(N, n)
    ranks = np.unique(np.linspace(1, N, 25).astype(int))
    mat = tail_matrix(ranks, cat, kind)
    for i, R in enumerate(ranks):
        for k in (1, 2, n // 2, n - 1, n):
            assert abs(mat[i, k - 1] - scalar(k, int(R), cat)) <= 1e-12


@pytest.mark.parametrize("kind", ["binom", "hyper"])
@pytest.mark.parametrize("N,n", [(40, 10), (500, 50), (50, 45)])
def test_tail_monotonicity(kind, N, n):
    mat = tail_matrix(np.arange(1, N + 1), CatalogSpec(N, n), kind)
    assert np.all(np.diff(mat, axis=1) >= -1e-15)  # non-decreasing in k
    assert np.all(np.diff(mat, axis=0) <= 1e-15)  # non-increasing in R
    assert np.all((mat >= 0) & (mat <= 1))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 400).flatmap(lambda N: st.tuples(
    st.just(N), st.integers(2, min(N, 60)), st.integers(1, N), st.integers(1, N))))
def test_binomial_tail_non_increasing_in_rank(args):
    N, n, R1, R2 = args
    cat = CatalogSpec(N, n)
    lo, hi = sorted((R1, R2))
    for k in (1, max(1, n // 3), n):
        assert binom_tail_prob(k, lo, cat) >= binom_tail_prob(k, hi, cat) - 1e-15
        assert hyper_tail_prob(k, lo, cat) >= hyper_tail_prob(k, hi, cat) - 1e-15


def test_hypergeometric_close_to_full_catalog():
    """N=50, n=45 against the recursive hypergeometric PMF."""
    from fractions import Fraction

    N, n = 50, 45
    cat = CatalogSpec(N, n)
    for R in range(1, N + 1):
        good, bad, draws = R - 1, N - R, n - 1
        # P(X = l) built from P(X = lo) by the ratio recursion, exactly
        from math import comb

        lo = max(0, draws - bad)
        pmf = {lo: Fraction(comb(good, lo) * comb(bad, draws - lo), comb(N - 1, draws))}
        for l in range(lo, min(good, draws)):
            pmf[l + 1] = pmf[l] * Fraction((good - l) * (draws - l), (l + 1) * (bad - draws + l + 1))
        for k in range(1, n + 1):
            exact = Fraction(1) if R < k else sum(v for l, v in pmf.items() if l <= k - 1)
            assert hyper_tail_prob(k, R, cat) == pytest.approx(float(exact), abs=1e-12)


class TestHoeffding:
    def test_paper_example(self):
        b = hoeffding_population_bound(30000, 0.01)
        assert b.bound == pytest.approx(0.0049575043533327, rel=1e-12)
        assert b.bound <= 0.005

    def test_zero_threshold(self):
        assert hoeffding_population_bound(17, 0).bound == 2.0

    def test_unit(self):
        assert hoeffding_population_bound(1, 1).bound == pytest.approx(0.27067056647322538, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            hoeffding_population_bound(10, -0.1)
        with pytest.raises(DomainError):
            hoeffding_population_bound(0, 0.1)
