"""Exact arithmetic, sampler correctness, and calibration identities."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from gtmkit.dist import (
    RandomSource,
    lam_left,
    lam_right,
    max_lambda_cap,
    overhead_c,
    poisson_cdf,
    poisson_chernoff_multiplicative,
    sample_bernoulli,
    sample_exponential,
    sample_laplace,
    sample_pareto,
    sample_poisson,
    weight_sequence,
)
from gtmkit.errors import ResourceCapError


class TestRandomSource:
    def test_identical_seed_path_identical_draws(self):
        a = RandomSource(123, (4, 5))
        b = RandomSource(123, (4, 5))
        assert a.generator.random(8).tolist() == b.generator.random(8).tolist()

    def test_split_children_independent_of_parent_state(self):
        parent = RandomSource(9)
        child = parent.split(0)
        before = child.generator.random(4).tolist()
        # Draw from the parent, re-derive an identical child, and confirm the
        # child's stream is unaffected.
        parent.generator.random(100)
        again = RandomSource(9).split(0)
        assert again.generator.random(4).tolist() == before

    def test_distinct_keys_distinct_streams(self):
        root = RandomSource(1)
        assert root.split(0).generator.random(4).tolist() != root.split(1).generator.random(4).tolist()

    def test_split_rejects_bad_keys(self):
        with pytest.raises(ValueError):
            RandomSource(0).split()
        with pytest.raises(ValueError):
            RandomSource(0).split(-1)


class TestPoissonCdf:
    def test_single_mass_term(self):
        for lam in (0.3, 1.0, 5.0, 40.0):
            assert poisson_cdf(0, lam) == pytest.approx(math.exp(-lam), rel=1e-14)

    def test_zero_mean_all_mass_at_zero(self):
        for c in (0, 1, 17):
            assert poisson_cdf(c, 0.0) == 1.0

    def test_six_term_hand_recurrence(self):
        # Independent oracle: accumulate e^-5 * 5^k / k! directly.
        term, total = math.exp(-5.0), math.exp(-5.0)
        for k in range(1, 6):
            term *= 5.0 / k
            total += term
        assert poisson_cdf(5, 5.0) == pytest.approx(total, rel=1e-13)
        assert poisson_cdf(5, 5.0) == pytest.approx(0.615961, abs=1e-6)

    def test_matches_gamma_function_oracle(self):
        # Regularized upper incomplete gamma is an independent CDF route.
        for c, lam in [(3, 2.0), (10, 25.2), (60, 45.0), (200, 270.0), (5, 800.0)]:
            assert poisson_cdf(c, lam) == pytest.approx(
                float(scipy.special.gammaincc(c + 1, lam)), rel=1e-10, abs=1e-300
            )

    def test_monotone_non_increasing_in_lambda(self):
        values = [poisson_cdf(12, lam) for lam in np.linspace(0.1, 60, 200)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_no_underflow_at_large_mean(self):
        assert poisson_cdf(100, 900.0) > 0.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            poisson_cdf(3, -1.0)
        with pytest.raises(ValueError):
            poisson_cdf(-1, 1.0)
        with pytest.raises(ValueError):
            poisson_cdf(2.5, 1.0)


class TestMeanThresholds:
    def test_lam_left_collapses_at_zero(self):
        assert lam_left(0, 0.5) == pytest.approx(2 * math.log(2), rel=1e-14)

    def test_lam_left_value_and_tail(self):
        value = lam_left(10, 0.01)
        ell = math.log(100.0)
        assert value == pytest.approx(10 + ell + math.sqrt(20 * ell + ell * ell), rel=1e-14)
        assert poisson_cdf(10, value) <= 0.01

    def test_lam_left_strictly_increasing_in_c(self):
        values = [lam_left(c, 0.05) for c in np.linspace(0, 40, 100)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_lam_right_value_and_tail(self):
        result = lam_right(10, 0.01)
        assert result.valid
        assert result.value == pytest.approx(11 - math.sqrt(22 * math.log(100.0)), rel=1e-14)
        assert 1.0 - poisson_cdf(10, result.value) <= 0.01

    def test_lam_right_alpha_near_one_approaches_c_plus_one(self):
        assert lam_right(7, 1 - 1e-12).value == pytest.approx(8.0, abs=1e-5)

    def test_lam_right_validity_flag(self):
        assert not lam_right(0, 0.01).valid  # 1 < 2 ln 100
        assert lam_right(30, 0.01).valid

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                lam_left(1, bad)
            with pytest.raises(ValueError):
                lam_right(1, bad)

    @settings(max_examples=250, derandomize=True, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.0, 50.0), st.floats(0.0, 30.0))
    def test_algebraic_inversion(self, alpha, lam, spread):
        ell = math.log(1.0 / alpha)
        x = max(0.0, 2 * ell - 1.0) + spread + 1e-9
        assert (lam <= lam_right(x, alpha).value) == (x + 1.0 >= lam_left(lam, alpha))


class TestOverheadControl:
    def test_symmetric_unit_logs(self):
        sol = overhead_c(math.exp(-1), math.exp(-1), 2.0)
        assert sol.r == pytest.approx((3 * math.sqrt(2) + math.sqrt(26)) / 2, rel=1e-13)
        assert sol.c == 22
        assert lam_left(22, math.exp(-1)) <= 2.0 * lam_right(22, math.exp(-1)).value

    def test_invariants_over_grid(self):
        for gamma in (1.1, 1.4, 2.0):
            for alpha in (0.3, 0.05, 1e-3):
                for beta in (0.3, 0.05, 1e-3):
                    sol = overhead_c(alpha, beta, gamma)
                    a_log, b_log = math.log(1 / alpha), math.log(1 / beta)
                    assert lam_left(sol.c, alpha) <= gamma * lam_right(sol.c, beta).value
                    assert sol.c + 1 > 2 * max(a_log, b_log)
                    assert sol.c == max(math.floor(2 * max(a_log, b_log)), math.ceil(sol.r**2))

    def test_loose_size_bound(self):
        # Coarse constant check of the c = O((A+B)/(gamma-1)^2) growth.
        for gamma in (1.1, 1.5, 2.0):
            for alpha in (0.1, 1e-2, 1e-4):
                for beta in (0.1, 1e-2, 1e-4):
                    sol = overhead_c(alpha, beta, gamma)
                    a_log, b_log = math.log(1 / alpha), math.log(1 / beta)
                    assert sol.c <= 100.0 * (a_log + b_log) / (gamma - 1.0) ** 2

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            overhead_c(0.1, 0.1, 1.0)
        with pytest.raises(ValueError):
            overhead_c(0.1, 0.1, 2.5)


class TestSamplers:
    def test_poisson_zero_mean(self):
        rng = RandomSource(0)
        assert all(sample_poisson(0.0, rng) == 0 for _ in range(10))

    def test_poisson_mean_band_small_lambda(self):
        rng = RandomSource(1)
        draws = np.array([sample_poisson(7.0, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 7.0) <= 4 * math.sqrt(7.0 / draws.size)
        assert abs(draws.var() - 7.0) <= 4 * math.sqrt((7 * (1 + 3 * 7) - 49) / draws.size)

    def test_poisson_mean_band_large_lambda(self):
        rng = RandomSource(2)
        lam = 500.0  # above the inversion crossover
        draws = np.array([sample_poisson(lam, rng) for _ in range(20_000)])
        assert abs(draws.mean() - lam) <= 4 * math.sqrt(lam / draws.size)

    def test_poisson_multiplicative_tail(self):
        rng = RandomSource(3)
        lam = 20.0
        bound = poisson_chernoff_multiplicative(lam, math.e * lam)
        assert bound == pytest.approx(math.exp(-lam), rel=1e-9)
        draws = np.array([sample_poisson(lam, rng) for _ in range(100_000)])
        assert np.count_nonzero(draws > math.e * lam) == 0

    def test_poisson_cap(self):
        with pytest.raises(ResourceCapError):
            sample_poisson(2e9, RandomSource(0))
        assert sample_poisson(2e9, RandomSource(0), max_lambda=1e10) > 0

    def test_cap_env_override(self, monkeypatch):
        monkeypatch.setenv("GTMKIT_MAX_LAMBDA", "5.0")
        assert max_lambda_cap() == 5.0
        with pytest.raises(ResourceCapError):
            sample_poisson(6.0, RandomSource(0))
        monkeypatch.setenv("GTMKIT_MAX_LAMBDA", "-1")
        with pytest.raises(ValueError):
            max_lambda_cap()

    def test_exponential_quantile_identity(self):
        # Pr[eta > tau * ln(1/x)] = x at x = 0.25.
        rng = RandomSource(4)
        tau, x = 2.0, 0.25
        draws = sample_exponential(tau, rng, size=100_000)
        rate = float(np.mean(draws > tau * math.log(1 / x)))
        assert abs(rate - x) <= 4 * math.sqrt(x * (1 - x) / draws.size)

    def test_laplace_median_zero(self):
        draws = sample_laplace(3.0, RandomSource(5), size=100_000)
        assert abs(float(np.mean(draws < 0)) - 0.5) <= 4 * math.sqrt(0.25 / draws.size)

    def test_laplace_scale(self):
        draws = sample_laplace(3.0, RandomSource(6), size=100_000)
        assert abs(float(np.var(draws)) - 2 * 9.0) <= 4 * 90.0 / math.sqrt(draws.size)

    def test_bernoulli_endpoints(self):
        rng = RandomSource(7)
        assert all(sample_bernoulli(1.0, rng) == 1 for _ in range(20))
        assert all(sample_bernoulli(0.0, rng) == 0 for _ in range(20))

    def test_pareto_support_and_survival(self):
        draws = sample_pareto(2.0, RandomSource(8), size=100_000)
        assert float(draws.min()) >= 1.0
        # Pr[w > u] = u^-sigma at u = 3.
        rate = float(np.mean(draws > 3.0))
        want = 3.0**-2.0
        assert abs(rate - want) <= 4 * math.sqrt(want * (1 - want) / draws.size)

    def test_pareto_inverse_moment(self):
        draws = sample_pareto(3.0, RandomSource(9), size=100_000)
        inv = 1.0 / draws
        se = float(np.std(inv)) / math.sqrt(draws.size)
        assert abs(float(np.mean(inv)) - 0.75) <= 4 * se

    def test_pareto_truncated_mean(self):
        draws = np.minimum(sample_pareto(2.0, RandomSource(10), size=100_000), 100.0)
        se = float(np.std(draws)) / math.sqrt(draws.size)
        assert float(np.mean(draws)) <= 2.0 + 4 * se

    def test_scale_domain_errors(self):
        rng = RandomSource(0)
        for fn in (sample_exponential, sample_laplace):
            with pytest.raises(ValueError):
                fn(0.0, rng)
            with pytest.raises(ValueError):
                fn(-1.0, rng)
        with pytest.raises(ValueError):
            sample_pareto(0.0, rng)
        with pytest.raises(ValueError):
            sample_bernoulli(1.5, rng)


class TestThinningAndAdditivity:
    @pytest.mark.parametrize("lam", [3.0, 9.0, 25.0])
    @pytest.mark.parametrize("p", [0.15, 0.4, 0.9])
    def test_thinning_matches_thinned_poisson(self, lam, p):
        rng = RandomSource(11, (int(lam * 10), int(p * 100))).generator
        n = rng.poisson(lam, size=100_000)
        k = rng.binomial(n, p)
        mean = lam * p
        assert abs(float(np.mean(k)) - mean) <= 4 * math.sqrt(mean / k.size)
        var_se = math.sqrt((mean * (1 + 3 * mean) - mean * mean) / k.size)
        assert abs(float(np.var(k)) - mean) <= 4 * var_se

    def test_additivity(self):
        rng = RandomSource(12).generator
        s = rng.poisson(2.5, size=100_000) + rng.poisson(4.5, size=100_000)
        assert abs(float(np.mean(s)) - 7.0) <= 4 * math.sqrt(7.0 / s.size)
        var_se = math.sqrt((7 * (1 + 3 * 7) - 49) / s.size)
        assert abs(float(np.var(s)) - 7.0) <= 4 * var_se


class TestWeightSequence:
    def test_series_constant_range(self):
        ws = weight_sequence(0.1)
        assert 1.0 < ws.zeta < 1.25

    def test_first_weight_identity(self):
        ws = weight_sequence(0.3)
        assert ws.omega(1) * ws.zeta * math.log(3.0) ** 3 == pytest.approx(1.0, rel=1e-14)

    def test_inverse_weight_envelope(self):
        ws = weight_sequence(0.5)
        for t in (1, 10, 1000):
            inv = 1.0 / ws.omega(t)
            envelope = t * math.log(t + 2.0) ** 3
            assert envelope < inv < 2.0 * envelope

    def test_partial_sums_below_one_and_near_one(self):
        ws = weight_sequence(0.2, tol=1e-9)
        t = np.arange(1, 1_000_001, dtype=np.float64)
        partial = float(np.sum(1.0 / (ws.zeta * t * np.log(t + 2.0) ** 3)))
        assert partial < 1.0
        # Residual tail above 10^6 is at most the integral bound
        # (1/zeta) * 1/(2 ln^2(10^6)), up to a tiny integrand correction.
        tail_bound = 1.01 / (2.0 * ws.zeta * math.log(1e6) ** 2)
        assert partial >= 1.0 - tail_bound

    def test_beta_split(self):
        ws = weight_sequence(0.2)
        assert ws.beta(5) == pytest.approx(ws.omega(5) * 0.2, rel=1e-15)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            weight_sequence(0.0)
        with pytest.raises(ValueError):
            weight_sequence(0.5, tol=0.0)
        with pytest.raises(ValueError):
            weight_sequence(0.5).omega(0)
