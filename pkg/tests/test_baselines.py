"""Prior-work testers: parameter arithmetic and observable behavior."""

import math

import numpy as np
import pytest

from gtmkit.baselines import (
    LiuTalwarConfig,
    cohen_n_per_step,
    cohen_run,
    ghazi_repetitions,
    ghazi_run,
    liu_talwar_run,
)
from gtmkit.dist import RandomSource
from gtmkit.errors import ResourceCapError
from gtmkit.gtm import BinaryOracle, bernoulli_oracle, constant_oracle


class TestCohen:
    def test_evaluations_per_step_example(self):
        # beta=0.2, theta=1, p*=0.5: ceil(ln 10 / 0.05) = 47.
        assert cohen_n_per_step(0.5, 0.2, 1.0) == 47

    def test_large_theta_limit(self):
        # (beta/2)^(1/theta) -> 1, so N_t -> ceil(ln(2/beta)/p*).
        assert cohen_n_per_step(0.5, 0.2, 1e9) == math.ceil(math.log(10.0) / 0.5)

    def test_halts_at_target_given_good_pass_probability(self):
        # Conditioned on p_dagger above its low quantile, a step at p >= p*
        # is missed with probability at most beta/2.
        p_star, beta, theta = 0.5, 0.2, 2.0
        rng = RandomSource(90)
        lo_quantile = (beta / 2.0) ** (1.0 / theta)
        misses = 0
        good = 0
        n = 3000
        for i in range(n):
            transcript = cohen_run(
                [bernoulli_oracle(p_star, 0.1)], p_star, beta, theta, rng.split(i)
            )
            if transcript.p_dagger >= lo_quantile:
                good += 1
                misses += not transcript.halted
        bound = beta / 2.0
        assert good > 2000
        assert misses / good <= bound + 4 * math.sqrt(bound * (1 - bound) / good)

    def test_continues_on_tiny_probabilities(self):
        rng = RandomSource(91)
        halts = sum(
            cohen_run([bernoulli_oracle(1e-5, 0.1)] * 20, 0.5, 0.2, 2.0, rng.split(i)).halted
            for i in range(500)
        )
        assert halts / 500 <= 0.05

    def test_eval_budget_respected(self):
        rng = RandomSource(92)
        n_t = cohen_n_per_step(0.5, 0.2, 1.0)
        transcript = cohen_run([bernoulli_oracle(0.2, 0.1)] * 5, 0.5, 0.2, 1.0, rng)
        assert all(calls <= n_t for calls in transcript.ftest_calls)
        assert all(e <= c for e, c in zip(transcript.oracle_evals, transcript.ftest_calls))

    def test_generic_oracle_path_matches(self):
        # Without exact_p the per-draw loop is used; distribution must agree.
        def draw(rng):
            return 1 if rng.generator.random() < 0.3 else -1

        generic = BinaryOracle(draw, 0.1)
        rng = RandomSource(93)
        halts = sum(
            cohen_run([generic] * 3, 0.5, 0.2, 2.0, rng.split(0, i)).halted for i in range(2000)
        )
        halts_fast = sum(
            cohen_run([bernoulli_oracle(0.3, 0.1)] * 3, 0.5, 0.2, 2.0, rng.split(1, i)).halted
            for i in range(2000)
        )
        assert abs(halts - halts_fast) / 2000 <= 4 * math.sqrt(0.25 / 2000) * 2


class TestLiuTalwar:
    def _config(self, **kw):
        base = dict(p_star=0.5, beta=0.1, delta=0.1, eps0=0.1, eps1=0.1, eps=2.4, T=10)
        base.update(kw)
        return LiuTalwarConfig(**base)

    def test_parameter_arithmetic(self):
        config = self._config()
        assert config.sigma_LT == pytest.approx(1.0)
        want_c = 2 * (math.exp(0.2) + 1 + math.exp(0.05))
        assert config.C == pytest.approx(want_c, rel=1e-12)
        assert config.C < 21.0
        want_delta = want_c * math.log(8 * 10 / 0.1) / (0.1 * (math.exp(0.2) - 1))
        assert config.Delta == pytest.approx(want_delta, rel=1e-9)
        # Independent re-derivation of N in log space.
        log_n = 0.1 + math.log(config.Delta) - math.log(0.5) + 1.0 * math.log(11 / 0.1)
        assert math.log(config.N) == pytest.approx(log_n, rel=1e-9)

    def test_odds_map_monotone_and_symmetric_point(self):
        config = self._config()
        assert config.phi(0.6) > config.phi(0.4)
        values = [config.phi(x) for x in np.linspace(0.0, 1.0, 21)]
        assert all(b > a for a, b in zip(values, values[1:]))
        # As N -> infinity with Delta fixed, phi(1/2) -> 1.
        assert self._config(beta=0.001).phi(0.5) == pytest.approx(1.0, abs=1e-4)

    def test_resource_error_reports_required_n(self):
        # Tight privacy makes the per-step sample size astronomically large.
        with pytest.raises(ResourceCapError) as err:
            liu_talwar_run(
                [bernoulli_oracle(0.5, 0.01)] * 100,
                0.5, 0.1, 0.1, 0.1, 0.01, 0.5, 100, RandomSource(94),
            )
        assert err.value.mean > 1e9

    def test_runs_when_sample_size_is_modest(self):
        # A loose privacy target keeps N manageable; high p should halt fast.
        transcripts = [
            liu_talwar_run(
                [bernoulli_oracle(0.95, 0.05)] * 10,
                0.5, 0.2, 0.2, 0.5, 0.05, 6.6, 10, RandomSource(95, (i,)),
            )
            for i in range(50)
        ]
        assert sum(t.halted for t in transcripts) >= 40

    def test_transcript_depends_on_p_hat_only_through_odds_map(self):
        config = self._config(eps=6.6, eps0=0.5, eps1=0.05, beta=0.2, delta=0.2)
        # Same p_hat sequence => same decision for equal noise draws;
        # monotone map means higher p_hat can only favor halting.
        assert config.log_phi(0.7) > config.log_phi(0.5) > config.log_phi(0.2)

    def test_validation(self):
        with pytest.raises(ValueError):
            self._config(eps0=1.5)
        with pytest.raises(ValueError):
            self._config(T=1)


class TestGhazi:
    def test_repetition_formula(self):
        want = math.ceil((1 / 0.4) * (2 / 0.2) ** (0.1 / 0.5) * math.log(2 / 0.2))
        assert ghazi_repetitions(0.4, 0.2, 0.1, 0.5) == want

    def test_zero_drop_round_evaluates_everything(self):
        # Conditioned on k = 0 every gate passes; with theta large, k = 0
        # almost surely.
        oracles = [constant_oracle(1)] * 4
        result = ghazi_run(oracles, [2] * 4, 50.0, RandomSource(96))
        assert result.k == 0
        assert len(result.survivors) == 8
        assert not result.bottom

    def test_empty_survivors_is_bottom(self):
        oracles = [constant_oracle(-1)] * 3
        result = ghazi_run(oracles, [3] * 3, 1.0, RandomSource(97))
        assert result.bottom and result.output is None and result.index is None

    def test_geometric_k_distribution(self):
        theta = 1.0
        rng = RandomSource(98)
        ks = [ghazi_run([constant_oracle(-1)], [0], theta, rng.split(i)).k for i in range(20_000)]
        ks = np.array(ks)
        for j in (1, 2, 3):
            want = math.exp(-theta * j)
            rate = float(np.mean(ks >= j))
            assert abs(rate - want) <= 4 * math.sqrt(want * (1 - want) / ks.size)

    def test_bad_selection_lower_bound(self):
        # Good/bad toy instance: the chance of returning a bad index is at
        # least (1 - e^-theta) (T-G) p_bar / (1 + (T-G-1) p_bar + G p_star).
        T, G = 20, 2
        p_star, p_bar, theta = 0.8, 0.2, 1.0
        oracles = [bernoulli_oracle(p_star, 0.05) for _ in range(G)]
        oracles += [bernoulli_oracle(p_bar, 0.05) for _ in range(T - G)]
        reps = [1] * T
        rng = RandomSource(99)
        n = 4000
        bad = 0
        for i in range(n):
            result = ghazi_run(oracles, reps, theta, rng.split(i))
            if not result.bottom and result.index >= G:
                bad += 1
        floor = (1 - math.exp(-theta)) * (T - G) * p_bar / (1 + (T - G - 1) * p_bar + G * p_star)
        rate = bad / n
        assert rate >= floor - 4 * math.sqrt(floor * (1 - floor) / n)

    def test_gate_and_oracle_draw_independence(self):
        # Gates at k=1 pass with probability e^{-eps_1}; survivor counts must
        # match the product law gate * success.
        eps1, theta = 0.5, 0.4
        rng = RandomSource(100)
        survivors_pos = 0
        trials = 0
        for i in range(30_000):
            result = ghazi_run([bernoulli_oracle(0.5, eps1)], [1], theta, rng.split(i))
            if result.k == 1:
                trials += 1
                survivors_pos += len([1 for o, _ in result.survivors if o == 1])
        want = math.exp(-eps1) * 0.5
        rate = survivors_pos / trials
        assert abs(rate - want) <= 4 * math.sqrt(want * (1 - want) / trials)
