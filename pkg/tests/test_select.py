"""Thresholded selection with random stopping."""

import math

import numpy as np
import pytest

from gtmkit.dist import RandomSource, sample_laplace
from gtmkit.select import ScoredOracle, TSelectConfig, iteration_cap, t_select


def _scored(pass_p: float, eps: float = 0.3, delta: float = 0.0) -> ScoredOracle:
    # Score 1 with probability pass_p, else 0; threshold tests sit at 0.5.
    def draw(rng):
        if rng.generator.random() < pass_p:
            return "hi", 1.0
        return "lo", 0.0

    return ScoredOracle(draw, eps, delta)


class TestIterationCap:
    def test_degenerate_formula_point(self):
        # xi = 1, eps0 = 2 collapses the log term: ceil(1 + 1/e) = 2.
        assert iteration_cap(1.0, 2.0) == 2

    def test_typical_values(self):
        assert iteration_cap(0.5, 1.0) == math.ceil(max(2 * math.log(2.0), 1 + 2 / math.e))
        assert iteration_cap(0.01, 0.5) == math.ceil(100 * math.log(4.0))

    def test_domain(self):
        with pytest.raises(ValueError):
            iteration_cap(0.0, 0.5)
        with pytest.raises(ValueError):
            iteration_cap(1.5, 0.5)
        with pytest.raises(ValueError):
            iteration_cap(0.5, 0.0)

    def test_config_computes_cap(self):
        config = TSelectConfig(tau=0.5, xi=0.25, eps0=0.5)
        assert config.T == iteration_cap(0.25, 0.5)


class TestTSelect:
    def test_always_passing_oracle_returns_first_draw(self):
        result = t_select(_scored(1.0), TSelectConfig(tau=0.5, xi=0.1, eps0=0.5), RandomSource(0))
        assert not result.failed and result.draws == 1 and result.candidate == "hi"

    def test_returned_score_clears_threshold(self):
        rng = RandomSource(1)
        config = TSelectConfig(tau=0.5, xi=0.2, eps0=0.5)
        for i in range(300):
            result = t_select(_scored(0.3), config, rng.split(i))
            if not result.failed:
                assert result.score >= config.tau

    def test_draws_never_exceed_cap(self):
        rng = RandomSource(2)
        config = TSelectConfig(tau=0.5, xi=0.05, eps0=0.5)
        for i in range(300):
            result = t_select(_scored(0.02), config, rng.split(i))
            assert 1 <= result.draws <= config.T

    def test_never_passing_oracle_fails(self):
        result = t_select(_scored(0.0), TSelectConfig(tau=0.5, xi=1.0, eps0=0.5), RandomSource(3))
        assert result.failed and result.candidate is None and result.draws == 1

    def test_failure_probability_bound(self):
        # Pr[failure] <= ((1 - p1)(1 + eps0/2)/p1) * xi.
        p1, xi, eps0 = 0.4, 0.05, 0.5
        config = TSelectConfig(tau=0.5, xi=xi, eps0=eps0)
        rng = RandomSource(4)
        n = 4000
        failures = sum(t_select(_scored(p1), config, rng.split(i)).failed for i in range(n))
        bound = (1 - p1) * (1 + eps0 / 2) / p1 * xi
        rate = failures / n
        assert rate <= bound + 4 * math.sqrt(bound * (1 - bound) / n)

    def test_draw_count_geometric_domination(self):
        # Survival function of the draw count stays below the survival of
        # Geo(p1 (1 - xi) + xi), up to a 4-sigma band per point.
        p1, xi = 0.3, 0.1
        config = TSelectConfig(tau=0.5, xi=xi, eps0=0.5)
        rng = RandomSource(5)
        n = 4000
        draws = np.array([t_select(_scored(p1), config, rng.split(i)).draws for i in range(n)])
        stop = p1 * (1 - xi) + xi
        for k in (1, 2, 3, 5, 8, 12):
            empirical = float(np.mean(draws > k))
            geometric = (1 - stop) ** k
            assert empirical <= geometric + 4 * math.sqrt(geometric * (1 - geometric) / n)

    def test_privacy_cost_metadata(self):
        oracle = _scored(0.5, eps=0.3, delta=0.01)
        config = TSelectConfig(tau=0.5, xi=0.25, eps0=0.5)
        result = t_select(oracle, config, RandomSource(6))
        assert result.eps_cost == pytest.approx(2 * 0.3 + 0.5)
        assert result.delta_cost == pytest.approx(3 * math.exp(1.1) * 0.01 / 0.25)

    def test_noisy_scores_still_bounded_by_threshold(self):
        # A continuous-score oracle: value + Laplace noise.
        def draw(rng):
            return "y", 3.0 + sample_laplace(1.0, rng)

        oracle = ScoredOracle(draw, 0.2)
        config = TSelectConfig(tau=4.0, xi=0.3, eps0=0.5)
        rng = RandomSource(7)
        for i in range(200):
            result = t_select(oracle, config, rng.split(i))
            if not result.failed:
                assert result.score >= 4.0
