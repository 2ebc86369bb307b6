"""Audit harness: instances, bounds, ratio estimation, rate experiments."""

import math

import numpy as np
import pytest

from gtmkit.audit import (
    LaplaceInstance,
    empirical_privacy_ratio,
    error_rate_experiment,
    laplace_oracle,
    laplace_quantile,
    laplace_success_probability,
    locate_rejection_threshold,
    lower_bound_lambda0,
    odds_ratio,
    sample_complexity_floor,
    wilson_interval,
)
from gtmkit.dist import RandomSource
from gtmkit.gtm import GlobalUtilityPreset


class TestLaplaceInstance:
    def test_median_at_threshold(self):
        assert laplace_success_probability(2.0, 2.0, 0.7) == pytest.approx(0.5)

    def test_ln2_offset_gives_three_quarters(self):
        eps1 = 0.4
        f = 1.0 + math.log(2.0) / eps1
        assert laplace_success_probability(f, 1.0, eps1) == pytest.approx(0.75)

    def test_quantile_inverts_probability(self):
        for p in (0.1, 0.5, 0.9):
            f = laplace_quantile(p, 3.0, 0.6)
            assert laplace_success_probability(f, 3.0, 0.6) == pytest.approx(p, rel=1e-12)

    def test_empirical_matches_exact(self):
        rng = RandomSource(110)
        for i, f in enumerate((-2.0, 0.0, 2.0)):
            oracle = laplace_oracle(f, 0.0, 0.8)
            n = 100_000
            draws = oracle.draw_batch(n, rng.split(i))
            rate = float(np.mean(draws == 1))
            p = oracle.exact_p
            assert abs(rate - p) <= 4 * math.sqrt(p * (1 - p) / n)

    def test_adjacent_shift_moves_probabilities_by_at_most_eps(self):
        inst = LaplaceInstance.from_probabilities((0.1, 0.4, 0.7), 0.3)
        shifted = inst.shifted(-1.0)
        for t in range(3):
            p, q = inst.success_probability(t), shifted.success_probability(t)
            assert q <= p <= math.exp(0.3) * q
            assert (1 - p) <= math.exp(0.3) * (1 - q)

    def test_shift_limited_to_unit(self):
        inst = LaplaceInstance((0.0,), 0.0, 1.0)
        with pytest.raises(ValueError):
            inst.shifted(1.5)


class TestLowerBounds:
    def test_pure_equal_budgets_closed_form(self):
        # delta = 0, eps1 = eps: Lambda0 = e^{-2 eps} T / (4 beta^2).
        eps = 0.3
        bound = lower_bound_lambda0(50, 0.1, 0.0, eps, eps)
        assert bound.Lambda0 == pytest.approx(math.exp(-2 * eps) * 50 / (4 * 0.01), rel=1e-12)
        assert bound.delta_prime == 0.0

    def test_half_exponent_rederived(self):
        t_len, beta, eps1, eps = 100, 0.1, 0.25, 0.5
        bound = lower_bound_lambda0(t_len, beta, 0.0, eps, eps1)
        log_inner = math.log(t_len / (2 * beta)) + math.log(1 / (2 * beta))
        want = math.exp(-2 * eps1 + 0.5 * log_inner)
        assert bound.Lambda0 == pytest.approx(want, rel=1e-12)

    def test_delta_prime(self):
        bound = lower_bound_lambda0(10, 0.05, 0.01, 1.0, 0.5)
        assert bound.delta_prime == pytest.approx(0.01 / (math.e - 1), rel=1e-12)

    def test_precondition(self):
        with pytest.raises(ValueError):
            lower_bound_lambda0(10, 0.49, 0.5, 1.0, 0.5)

    def test_consistency_gate_never_fires_for_presets(self):
        # The achieved thresholds always respect the universal floor over a
        # default grid (upper and lower bounds cannot contradict).
        for t_len in (10, 100, 1000):
            for beta in (0.2, 0.05):
                for eps in (0.5, 1.0):
                    for eps1 in (0.01, 0.05, 0.1):
                        for p_star in (0.1, 0.5, 0.9):
                            preset = GlobalUtilityPreset(eps=eps, theta=1.0, gamma=1.5, beta=beta)
                            p_bar = min(
                                preset.step_params(t, eps1, p_star).p_bar_t
                                for t in (1, t_len)
                            )
                            if p_bar <= 0:
                                continue
                            floor = lower_bound_lambda0(t_len, beta, 0.0, eps, eps1).Lambda0
                            assert odds_ratio(p_star, p_bar) >= floor

    def test_sample_floor_values(self):
        # delta = 0 simplification and the eps1 -> 0 limit.
        assert sample_complexity_floor(0.25, 0.05, 0.0, 0.1, 0.1) == pytest.approx(
            math.exp(-0.1) / (4 * 0.25 * 0.1), rel=1e-12
        )
        assert sample_complexity_floor(0.25, 0.05, 0.0, 1.0, 1e-12) == pytest.approx(
            1.0 / (4 * 0.25), rel=1e-6
        )

    def test_sample_floor_domain(self):
        with pytest.raises(ValueError):
            sample_complexity_floor(0.7, 0.05, 0.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            sample_complexity_floor(0.25, 0.6, 0.0, 1.0, 0.1)


class TestWilson:
    def test_contains_point_estimate(self):
        for k, n in [(0, 100), (3, 100), (50, 100), (100, 100)]:
            lo, hi = wilson_interval(k, n)
            assert 0.0 <= lo <= k / n <= hi <= 1.0

    def test_shrinks_with_trials(self):
        lo1, hi1 = wilson_interval(50, 100)
        lo2, hi2 = wilson_interval(5000, 10000)
        assert hi2 - lo2 < hi1 - lo1


class TestRatioEstimation:
    @staticmethod
    def _coin_runner(p, src):
        return src.generator.random() < p

    def test_identical_streams_ratio_near_one(self):
        est = empirical_privacy_ratio(
            TestRatioEstimation._coin_runner,
            0.4, 0.4, lambda hit: hit, 20_000, RandomSource(111),
        )
        assert est.ratio == pytest.approx(1.0, abs=0.05)
        assert est.ci_low <= 1.0 <= est.ci_high

    def test_swapped_streams_invert_within_ci(self):
        rng = RandomSource(112)
        run = TestRatioEstimation._coin_runner
        ab = empirical_privacy_ratio(run, 0.5, 0.3, lambda h: h, 20_000, rng.split(0))
        ba = empirical_privacy_ratio(run, 0.3, 0.5, lambda h: h, 20_000, rng.split(1))
        inverted = (1.0 / ba.ci_high, 1.0 / ba.ci_low)
        assert max(ab.ci_low, inverted[0]) <= min(ab.ci_high, inverted[1])

    def test_indeterminate_on_zero_counts(self):
        est = empirical_privacy_ratio(
            lambda p, src: False, 0.0, 0.0, lambda h: h, 100, RandomSource(113)
        )
        assert est.indeterminate and not est.violates(1.0)

    def test_violation_requires_ci_separation(self):
        rng = RandomSource(114)
        run = TestRatioEstimation._coin_runner
        est = empirical_privacy_ratio(run, 0.6, 0.2, lambda h: h, 20_000, rng)
        assert est.violates(1.5)  # true ratio 3
        assert not est.violates(4.0)

    def test_harness_flags_noiseless_tester(self):
        # Negative control: a plain majority test with no privatizing noise
        # separates adjacent streams almost completely, and the harness must
        # flag it against any constant bound such as e^1.
        def run(p, src):
            return int(src.generator.binomial(400, p)) > 200

        est = empirical_privacy_ratio(
            run, 0.55, 0.45, lambda h: h, 5000, RandomSource(118)
        )
        assert est.ratio > 10.0
        assert est.violates(math.e)


class TestErrorRates:
    @staticmethod
    def _runner(p, src):
        class _T:
            halted = None

        t = _T()
        t.halted = bool(src.generator.random() < p)
        return t

    def test_zero_probability_never_halts(self):
        table = error_rate_experiment(self._runner, lambda p: p, [0.0], 500, RandomSource(115))
        assert table.rows[0][table.columns.index("halts")] == 0

    def test_rates_with_intervals(self):
        table = error_rate_experiment(
            self._runner, lambda p: p, [0.1, 0.5, 0.9], 2000, RandomSource(116)
        )
        for row in table.rows:
            p = row[0]
            rate = row[table.columns.index("halt_rate")]
            assert abs(rate - p) <= 4 * math.sqrt(p * (1 - p) / 2000 + 1e-9)
            assert row[table.columns.index("ci_low")] <= rate <= row[table.columns.index("ci_high")]

    def test_bisection_brackets_transition(self):
        # Halt rate = min(1, p / 0.2) crosses 0.5 at p = 0.1.
        def runner(p, src):
            class _T:
                halted = bool(src.generator.random() < min(1.0, p / 0.2))

            return _T()

        lo, hi = locate_rejection_threshold(
            runner, lambda p: p, 0.5, RandomSource(117), trials=800, lo=1e-4, hi=0.5, iters=14
        )
        assert lo <= 0.12 and hi >= 0.08 and lo < hi
