"""Empirical audit harness: adversarial instances, lower-bound formulas,
Monte Carlo privacy-ratio estimation, and error-rate experiments.

The Laplace construction gives oracle streams whose success probabilities
are known in closed form, which makes both accuracy experiments (exact
Type I/II rates) and privacy audits (adjacent streams with controlled
probability shifts) possible without trusting the mechanism under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .dist import RandomSource, sample_laplace
from .gtm import BinaryOracle
from .table import ResultTable

__all__ = [
    "LaplaceInstance",
    "laplace_oracle",
    "laplace_success_probability",
    "laplace_quantile",
    "AdversarialBound",
    "lower_bound_lambda0",
    "odds_ratio",
    "sample_complexity_floor",
    "wilson_interval",
    "RatioEstimate",
    "empirical_privacy_ratio",
    "error_rate_experiment",
    "locate_rejection_threshold",
]


# ---------------------------------------------------------------------------
# Laplace-mechanism instances (exact success probabilities)
# ---------------------------------------------------------------------------


def laplace_success_probability(f: float, tau_L: float, eps1: float) -> float:
    """Pr[f + Lap(1/eps1) >= tau_L], the two-branch closed form."""
    if not eps1 > 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    if f <= tau_L:
        return 0.5 * math.exp(-eps1 * (tau_L - f))
    return 1.0 - 0.5 * math.exp(-eps1 * (f - tau_L))


def laplace_quantile(p: float, tau_L: float, eps1: float) -> float:
    """The value f at which the success probability equals p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not eps1 > 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    if p <= 0.5:
        return tau_L + math.log(2.0 * p) / eps1
    return tau_L + math.log(1.0 / (2.0 * (1.0 - p))) / eps1


def laplace_oracle(f: float, tau_L: float, eps1: float, delta: float = 0.0) -> BinaryOracle:
    """Threshold test of a sensitivity-1 value under Laplace(1/eps1) noise.

    eps1-DP by the Laplace mechanism; the exact success probability is
    exposed so audits and tests can assert against it.
    """
    p = laplace_success_probability(f, tau_L, eps1)
    scale = 1.0 / eps1

    def draw(rng: RandomSource) -> int:
        return 1 if f + sample_laplace(scale, rng) >= tau_L else -1

    def batch(n: int, rng: RandomSource) -> np.ndarray:
        return np.where(f + sample_laplace(scale, rng, size=n) >= tau_L, 1, -1)

    return BinaryOracle(draw, eps1, delta, exact_p=p, batch_fn=batch)


@dataclass(frozen=True)
class LaplaceInstance:
    """A per-step sequence of sensitivity-1 values defining an oracle stream."""

    f_values: tuple[float, ...]
    tau_L: float
    eps1: float

    def success_probability(self, t: int) -> float:
        return laplace_success_probability(self.f_values[t], self.tau_L, self.eps1)

    def oracle(self, t: int, delta: float = 0.0) -> BinaryOracle:
        return laplace_oracle(self.f_values[t], self.tau_L, self.eps1, delta)

    def oracles(self, delta: float = 0.0) -> list[BinaryOracle]:
        return [self.oracle(t, delta) for t in range(len(self.f_values))]

    def shifted(self, delta_f: float) -> "LaplaceInstance":
        """Neighboring instance: every query value moved by |delta_f| <= 1."""
        if abs(delta_f) > 1.0:
            raise ValueError("a neighboring instance can move each value by at most 1")
        return LaplaceInstance(
            tuple(f + delta_f for f in self.f_values), self.tau_L, self.eps1
        )

    @classmethod
    def from_probabilities(
        cls, probabilities: Sequence[float], eps1: float, tau_L: float = 0.0
    ) -> "LaplaceInstance":
        values = tuple(laplace_quantile(p, tau_L, eps1) for p in probabilities)
        return cls(values, tau_L, eps1)


# ---------------------------------------------------------------------------
# Lower-bound formulas as numeric checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversarialBound:
    """Accuracy floor: any private tester's thresholds obey
    odds(p_star)/odds(p_bar) >= Lambda0."""

    Lambda0: float
    delta_prime: float


def _delta_prime(delta: float, eps: float) -> float:
    if delta == 0.0:
        return 0.0
    return delta / math.expm1(eps)


def lower_bound_lambda0(
    T: int, beta: float, delta: float, eps: float, eps1: float
) -> AdversarialBound:
    """Λ0 = e^{-2 eps1} (T / (2(beta + T delta')) * 1 / (2(beta + delta')))^{eps1/eps}."""
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if not eps > 0 or not eps1 > 0:
        raise ValueError("eps and eps1 must be positive")
    dp = _delta_prime(delta, eps)
    if beta + dp >= 0.5:
        raise ValueError(f"beta + delta' must stay below 1/2, got {beta + dp}")
    inner = (T / (2.0 * (beta + T * dp))) * (1.0 / (2.0 * (beta + dp)))
    return AdversarialBound(math.exp(-2.0 * eps1) * inner ** (eps1 / eps), dp)


def odds_ratio(p_star: float, p_bar: float) -> float:
    """odds(p_star) / odds(p_bar); the unified form of the accuracy floor."""
    for name, p in (("p_star", p_star), ("p_bar", p_bar)):
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {p}")
    return (p_star / (1.0 - p_star)) / (p_bar / (1.0 - p_bar))


def sample_complexity_floor(
    p_star: float, beta_II: float, delta: float, eps: float, eps1: float
) -> float:
    """Any tester's expected per-step evaluation count is at least
    e^{-eps1} / (4 p_star (2(beta_II + delta'))^{eps1/eps})."""
    if not 0.0 < p_star <= 0.5:
        raise ValueError(f"p_star must lie in (0, 1/2], got {p_star}")
    if not eps > 0 or not eps1 > 0:
        raise ValueError("eps and eps1 must be positive")
    dp = _delta_prime(delta, eps)
    if beta_II + dp >= 0.5:
        raise ValueError(f"beta_II + delta' must stay below 1/2, got {beta_II + dp}")
    return math.exp(-eps1) / (4.0 * p_star * (2.0 * (beta_II + dp)) ** (eps1 / eps))


# ---------------------------------------------------------------------------
# Monte Carlo ratio estimation
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval; preferred over Wald for near-0/1 rates."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class RatioEstimate:
    """Pr[event] under two adjacent streams, with a conservative ratio CI.

    ``indeterminate`` marks the zero-counts-on-both-sides case, where the
    ratio carries no information. A privacy violation is only flagged when
    the CI separates from the audited bound: ci_low > bound.
    """

    description: str
    p_hat: float
    p_hat_prime: float
    ratio: float
    ci_low: float
    ci_high: float
    trials: int
    indeterminate: bool = False

    def violates(self, bound: float) -> bool:
        return not self.indeterminate and self.ci_low > bound


def empirical_privacy_ratio(
    run_tester: Callable[[Any, RandomSource], Any],
    stream_a: Any,
    stream_b: Any,
    event: Callable[[Any], bool],
    trials: int,
    rng: RandomSource,
    description: str = "",
) -> RatioEstimate:
    """Estimate Pr[event] under both streams and their ratio with Wilson CIs.

    ``run_tester(stream, rng)`` must execute one independent run and return
    whatever ``event`` consumes. Draws for the two arms come from disjoint
    splits of ``rng``.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    src_a = rng.split(0)
    src_b = rng.split(1)
    count_a = 0
    count_b = 0
    for _ in range(trials):
        if event(run_tester(stream_a, src_a)):
            count_a += 1
    for _ in range(trials):
        if event(run_tester(stream_b, src_b)):
            count_b += 1
    p_a = count_a / trials
    p_b = count_b / trials
    if count_a == 0 and count_b == 0:
        return RatioEstimate(description, 0.0, 0.0, math.nan, 0.0, math.inf, trials, True)
    lo_a, hi_a = wilson_interval(count_a, trials)
    lo_b, hi_b = wilson_interval(count_b, trials)
    ratio = p_a / p_b if p_b > 0 else math.inf
    ci_low = lo_a / hi_b if hi_b > 0 else math.inf
    ci_high = hi_a / lo_b if lo_b > 0 else math.inf
    return RatioEstimate(description, p_a, p_b, ratio, ci_low, ci_high, trials, False)


# ---------------------------------------------------------------------------
# Type I / II rate experiments
# ---------------------------------------------------------------------------


def _halt_rate(
    run_tester: Callable[[Any, RandomSource], Any],
    instance: Any,
    trials: int,
    rng: RandomSource,
) -> int:
    halts = 0
    for _ in range(trials):
        transcript = run_tester(instance, rng)
        if getattr(transcript, "halted", False):
            halts += 1
    return halts


def error_rate_experiment(
    run_tester: Callable[[Any, RandomSource], Any],
    instance_family: Callable[[float], Any],
    p_grid: Sequence[float],
    trials: int,
    rng: RandomSource,
    *,
    locate_target: float | None = None,
) -> ResultTable:
    """Empirical halt rate per grid point, with Wilson intervals.

    ``instance_family(p)`` builds the stream on which every step has success
    probability exactly p; ``run_tester`` executes one run and returns an
    object with a ``halted`` attribute. When ``locate_target`` is given, the
    empirical rejection threshold (largest p holding the halt rate at or
    under the target) is bisected and recorded in the table metadata.
    """
    rows = []
    for i, p in enumerate(p_grid):
        halts = _halt_rate(run_tester, instance_family(p), trials, rng.split(i))
        lo, hi = wilson_interval(halts, trials)
        rows.append([float(p), trials, halts, halts / trials, lo, hi])
    meta: dict[str, Any] = {}
    if locate_target is not None:
        lo_p, hi_p = locate_rejection_threshold(
            run_tester, instance_family, locate_target, rng.split(len(p_grid)),
            trials=trials, hi=max(p_grid),
        )
        meta["rejection_lo"] = lo_p
        meta["rejection_hi"] = hi_p
    return ResultTable(
        columns=["p", "trials", "halts", "halt_rate", "ci_low", "ci_high"],
        rows=rows,
        meta=meta,
    )


def locate_rejection_threshold(
    run_tester: Callable[[Any, RandomSource], Any],
    instance_family: Callable[[float], Any],
    target_rate: float,
    rng: RandomSource,
    *,
    trials: int = 500,
    lo: float = 1e-6,
    hi: float = 0.5,
    iters: int = 12,
) -> tuple[float, float]:
    """Bisect for the largest p whose empirical halt rate stays <= target_rate.

    Returns the final (lo, hi) bracket: halt rate <= target at lo, > target
    at hi (assuming the usual monotone response; the caller picks the
    starting bracket so that holds).
    """
    if not 0.0 < target_rate < 1.0:
        raise ValueError("target_rate must lie in (0, 1)")
    if not 0.0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    for i in range(iters):
        mid = math.sqrt(lo * hi)  # geometric bisection: thresholds live on a log scale
        rate = _halt_rate(run_tester, instance_family(mid), trials, rng.split(i)) / trials
        if rate <= target_rate:
            lo = mid
        else:
            hi = mid
    return lo, hi
