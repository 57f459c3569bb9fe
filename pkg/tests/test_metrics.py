import numpy as np
import pytest
from scipy import stats

from sampled_hr.core import CatalogSpec, RankHistogram, RankProfile, histogram
from sampled_hr.dist import pmf_vector
from sampled_hr.errors import ConfigurationError, DomainError
from sampled_hr.metrics import (
    MonteCarloConfig,
    SamplingScheme,
    expected_shr_curve,
    hr_curve,
    ranks_from_uniform,
    sample_profile,
    sample_rank,
    shr_curve_monte_carlo,
    shr_variance_curve,
    simulate_profile,
    user_stream,
)

BINOM = SamplingScheme("binom")
HYPER = SamplingScheme("hyper")


def point_mass(R, N):
    mass = np.zeros(N)
    mass[R - 1] = 1.0
    return RankHistogram(mass)


class TestHitRatioCurve:
    def test_staircase(self):
        curve = hr_curve(RankProfile([1, 2, 2], 5))
        np.testing.assert_allclose(curve.values, [1 / 3, 1, 1, 1, 1], atol=1e-15)

    def test_all_last(self):
        curve = hr_curve(RankProfile([6] * 4, 6))
        assert curve.values.tolist() == [0, 0, 0, 0, 0, 1]

    def test_equals_cumulative_histogram(self):
        profile = simulate_profile(0.4, 5000, 700, seed=5)
        curve = hr_curve(profile)
        np.testing.assert_allclose(curve.values, np.cumsum(histogram(profile).mass), atol=1e-12)
        assert curve.K_max == 700 and curve.values[-1] == 1.0


class TestExpectedCurve:
    def test_all_mass_at_top(self):
        curve = expected_shr_curve(point_mass(1, 50), BINOM, CatalogSpec(50, 10))
        assert np.all(curve.values == 1.0)

    def test_single_user_binomial(self):
        curve = expected_shr_curve(point_mass(3, 5), BINOM, CatalogSpec(5, 3))
        assert curve.values[1] == pytest.approx(0.75, abs=1e-15)
        assert curve.values[0] == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("scheme", [BINOM, HYPER])
    def test_terminal_value(self, scheme):
        hist = histogram(simulate_profile(0.6, 300, 400, seed=1))
        assert expected_shr_curve(hist, scheme, CatalogSpec(400, 20)).values[-1] == 1.0

    def test_rejects_irrelevant_only(self):
        scheme = SamplingScheme("actual", [10])
        with pytest.raises(ConfigurationError):
            expected_shr_curve(point_mass(1, 10), scheme, CatalogSpec(10, 3))

    def test_schemes_agree_for_large_catalog(self):
        """N >= 50 n: with and without replacement differ by <= 0.01."""
        cat = CatalogSpec(3706, 100)
        hist = histogram(simulate_profile(0.3685, 20000, 3706, seed=9))
        a = expected_shr_curve(hist, BINOM, cat).values
        b = expected_shr_curve(hist, HYPER, cat).values
        assert np.max(np.abs(a - b)) <= 0.01


class TestVariance:
    def test_degenerate_kernels(self):
        # R = 1 has p = 1 at every k
        var = shr_variance_curve(point_mass(1, 30), BINOM, CatalogSpec(30, 5), M=10)
        assert np.all(var == 0.0)

    def test_single_user(self):
        var = shr_variance_curve(point_mass(3, 5), BINOM, CatalogSpec(5, 3), M=1)
        assert var[0] == pytest.approx(0.1875, abs=1e-15)
        assert var[-1] == 0.0


class TestSampleRank:
    @pytest.mark.parametrize("scheme", [BINOM, HYPER, SamplingScheme("actual", [40])])
    def test_top_rank_always_one(self, scheme):
        rng = user_stream(1, 0, 0)
        assert all(sample_rank(1, scheme, CatalogSpec(50, 10), rng) == 1 for _ in range(200))

    def test_full_sample_reproduces_rank(self):
        rng = user_stream(1, 0, 0)
        assert sample_rank(20, HYPER, CatalogSpec(20, 20), rng) == 20
        assert sample_rank(7, HYPER, CatalogSpec(20, 20), rng) == 7

    def test_irrelevant_only_needs_pool(self):
        with pytest.raises(ConfigurationError):
            SamplingScheme("actual")
        with pytest.raises(ConfigurationError):
            SamplingScheme("binom", [10])
        with pytest.raises(DomainError):
            SamplingScheme("nope")

    @pytest.mark.parametrize("kind", ["binom", "hyper"])
    def test_chi_square_against_pmf(self, kind):
        """10^6 draws at one rank follow the exact PMF."""
        cat = CatalogSpec(200, 12)
        R = 60
        ranks = np.full(10**6, R)
        sampled = sample_profile(RankProfile(ranks, 200), SamplingScheme(kind), cat, seed=123)
        observed = np.bincount(sampled.sampled_ranks - 1, minlength=cat.n)
        expected = pmf_vector(kind, R, cat) * ranks.size
        keep = expected > 5
        obs = np.append(observed[keep], observed[~keep].sum())
        exp = np.append(expected[keep], expected[~keep].sum())
        if exp[-1] == 0:
            obs, exp = obs[:-1], exp[:-1]
        _, pval = stats.chisquare(obs, exp * obs.sum() / exp.sum())
        assert pval > 0.01

    def test_scalar_and_block_streams_agree_in_law(self):
        cat = CatalogSpec(100, 10)
        draws = [sample_rank(30, BINOM, cat, user_stream(7, u, 0)) for u in range(4000)]
        mean = np.mean(draws)
        # E[r] = 1 + (n - 1)(R - 1)/(N - 1)
        assert mean == pytest.approx(1 + 9 * 29 / 99, abs=4 * np.std(draws) / np.sqrt(4000))


class TestMonteCarlo:
    def test_all_top_ranks(self):
        cfg = MonteCarloConfig(seed=3, runs=5)
        curve = shr_curve_monte_carlo(RankProfile([1] * 50, 80), BINOM, CatalogSpec(80, 8), cfg)
        assert np.all(curve.values == 1.0)
        assert np.all(curve.stderr == 0.0)

    def test_deterministic(self):
        profile = simulate_profile(0.5, 9000, 1000, seed=2)
        cat = CatalogSpec(1000, 50)
        a = shr_curve_monte_carlo(profile, HYPER, cat, MonteCarloConfig(seed=42, runs=3))
        b = shr_curve_monte_carlo(profile, HYPER, cat, MonteCarloConfig(seed=42, runs=3, workers=4))
        assert a.values.tobytes() == b.values.tobytes()
        assert a.stderr.tobytes() == b.stderr.tobytes()
        c = shr_curve_monte_carlo(profile, HYPER, cat, MonteCarloConfig(seed=43, runs=3))
        assert c.values.tobytes() != a.values.tobytes()

    def test_user_order_independent_of_workers(self):
        profile = simulate_profile(0.5, 20000, 1000, seed=2)
        cat = CatalogSpec(1000, 50)
        one = sample_profile(profile, BINOM, cat, seed=8, workers=1)
        many = sample_profile(profile, BINOM, cat, seed=8, workers=6)
        np.testing.assert_array_equal(one.sampled_ranks, many.sampled_ranks)

    def test_single_run_within_three_sigma(self):
        cat = CatalogSpec(3706, 100)
        profile = simulate_profile(0.3685, 10**4, 3706, seed=17)
        hist = histogram(profile)
        exp = expected_shr_curve(hist, BINOM, cat).values
        sd = np.sqrt(shr_variance_curve(hist, BINOM, cat, profile.M))
        run = shr_curve_monte_carlo(profile, BINOM, cat, MonteCarloConfig(seed=1)).values
        inside = np.abs(run - exp) <= 3 * sd + 1e-15
        assert inside.mean() >= 0.95

    @pytest.mark.parametrize("scheme", [BINOM, HYPER])
    def test_mean_of_runs_converges(self, scheme):
        cat = CatalogSpec(500, 50)
        profile = simulate_profile(0.4, 2000, 500, seed=4)
        exp = expected_shr_curve(histogram(profile), scheme, cat).values
        mc = shr_curve_monte_carlo(profile, scheme, cat, MonteCarloConfig(seed=11, runs=100))
        se = mc.stderr
        ok = (np.abs(mc.values - exp) <= 4 * se) | (se == 0) & (np.abs(mc.values - exp) < 1e-12)
        assert ok.all()

    def test_irrelevant_only_scheme(self):
        profile = RankProfile([1, 5, 9, 3], 20, effective_N=[12, 10, 15, 20])
        scheme = SamplingScheme.for_profile("actual", profile)
        cat = CatalogSpec(20, 10)
        curve = shr_curve_monte_carlo(profile, scheme, cat, MonteCarloConfig(seed=1, runs=20))
        assert curve.values[-1] == 1.0 and curve.K_max == 10
        small = SamplingScheme("actual", [12, 10, 15, 8])
        with pytest.raises(ConfigurationError):
            shr_curve_monte_carlo(profile, small, cat)

    def test_irrelevant_only_full_pool_is_deterministic(self):
        """effective_N == n means every candidate is drawn, so r equals the rank."""
        profile = RankProfile([1, 4, 6], 30, effective_N=[6, 6, 6])
        scheme = SamplingScheme.for_profile("actual", profile)
        sampled = sample_profile(profile, scheme, CatalogSpec(30, 6), seed=0)
        assert sampled.sampled_ranks.tolist() == [1, 4, 6]


class TestSimulate:
    def test_uniform_when_a_is_one(self):
        N, M = 50, 10**6
        profile = simulate_profile(1.0, M, N, seed=8)
        counts = np.bincount(profile.ranks - 1, minlength=N)
        # round-and-clamp gives half-width end cells
        probs = np.full(N, 1.0 / (N - 1))
        probs[0] = probs[-1] = 0.5 / (N - 1)
        _, pval = stats.chisquare(counts, probs * M)
        assert pval > 0.01

    def test_uniform_zero_maps_to_top(self):
        assert ranks_from_uniform([0.0], 0.3, 1000).tolist() == [1]
        assert ranks_from_uniform([0.999999999], 2.0, 1000).tolist() == [1000]

    def test_dkw_band_against_analytic_cdf(self):
        N, M, a = 3706, 10**5, 0.3685
        curve = hr_curve(simulate_profile(a, M, N, seed=21)).values
        # P(rank <= K) = P(x < (K - 1/2)/(N - 1)) under round-to-nearest
        K = np.arange(1, N + 1)
        cdf = np.clip((K - 0.5) / (N - 1), 0, 1) ** a
        eps = np.sqrt(np.log(2 / 0.01) / (2 * M))
        assert np.max(np.abs(curve - cdf)) <= eps

    def test_coupled_profiles_are_ordered(self):
        lo = simulate_profile(0.3, 1000, 500, seed=3)
        hi = simulate_profile(0.6, 1000, 500, seed=3)
        assert np.all(lo.ranks <= hi.ranks)

    def test_domain(self):
        with pytest.raises(DomainError):
            simulate_profile(0, 10, 10, seed=0)
