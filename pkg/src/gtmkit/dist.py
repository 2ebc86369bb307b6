"""Seedable sampling and Poisson tail calibration.

Everything downstream is built on this module: a splittable deterministic
random source, an exact Poisson CDF, the left/right Poisson mean thresholds
with the overhead-control solver that trades their ratio against the count
cutoff, inverse-CDF samplers for the handful of distributions used anywhere
in the toolkit, and the slowly-converging series constant behind the
per-step failure-probability weights.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special as _special

from .errors import ResourceCapError

__all__ = [
    "DEFAULT_MAX_LAMBDA",
    "MAX_LAMBDA_ENV",
    "POISSON_INVERSION_CROSSOVER",
    "RandomSource",
    "max_lambda_cap",
    "poisson_cdf",
    "lam_left",
    "LamRight",
    "lam_right",
    "OverheadSolution",
    "overhead_c",
    "sample_poisson",
    "sample_exponential",
    "sample_laplace",
    "sample_bernoulli",
    "sample_pareto",
    "poisson_chernoff_upper",
    "poisson_chernoff_lower",
    "poisson_chernoff_multiplicative",
    "WeightSequence",
    "weight_sequence",
]

#: Default cap on any Poisson mean we are willing to draw. A mean above this
#: means the mechanism would make an absurd number of black-box evaluations;
#: failing loudly beats hanging.
DEFAULT_MAX_LAMBDA = 1e9

#: Environment variable overriding the cap.
MAX_LAMBDA_ENV = "GTMKIT_MAX_LAMBDA"

#: Below this mean, Poisson draws use sequential inversion; at or above it we
#: delegate to numpy's exact transformed-rejection sampler (PTRS). Both paths
#: are exact; the crossover is a speed choice only.
POISSON_INVERSION_CROSSOVER = 30.0


def max_lambda_cap() -> float:
    """Resolve the active sampling cap, honoring ``GTMKIT_MAX_LAMBDA``."""
    raw = os.environ.get(MAX_LAMBDA_ENV)
    if raw is None:
        return DEFAULT_MAX_LAMBDA
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"{MAX_LAMBDA_ENV} must be a number, got {raw!r}") from exc
    if not value > 0:
        raise ValueError(f"{MAX_LAMBDA_ENV} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class RandomSource:
    """Deterministic random stream addressed by a seed and a split path.

    Identical ``(seed, path)`` yields a bit-identical draw sequence. Children
    obtained from :meth:`split` with distinct keys are statistically
    independent and never share generator state with the parent. A source is
    single-owner: drawing mutates its generator in place, so never hand the
    same instance to two concurrent consumers (hand each a split child).
    """

    seed: int
    path: tuple[int, ...] = ()

    @cached_property
    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))

    def split(self, *keys: int) -> "RandomSource":
        if not keys:
            raise ValueError("split requires at least one key")
        for key in keys:
            if not isinstance(key, (int, np.integer)) or key < 0:
                raise ValueError(f"split keys must be non-negative integers, got {key!r}")
        return RandomSource(self.seed, self.path + tuple(int(k) for k in keys))


_U53 = float(1 << 53)


def _open_unit(gen: np.random.Generator, size: int | None = None):
    # Uniforms strictly inside (0, 1): dyadic midpoints, so inverse-CDF
    # transforms below never hit log(0).
    if size is None:
        return (int(gen.integers(0, 1 << 53)) + 0.5) / _U53
    draws = gen.integers(0, 1 << 53, size=size).astype(np.float64)
    return (draws + 0.5) / _U53


# ---------------------------------------------------------------------------
# Exact Poisson CDF and the mean thresholds
# ---------------------------------------------------------------------------


def _check_count(c, name: str = "c") -> int:
    if isinstance(c, bool) or not isinstance(c, (int, np.integer)):
        raise ValueError(f"{name} must be a non-negative integer, got {c!r}")
    if c < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {c!r}")
    return int(c)


def _check_prob_open(alpha: float, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {alpha}")
    return alpha


def poisson_cdf(c: int, lam: float) -> float:
    """Pr[Po(lam) <= c], summed exactly via a log-space term recurrence.

    The running term log(e^{-lam} lam^k / k!) is accumulated with
    log-add-exp, so the sum neither underflows for large means (beyond
    lam ~ 700 the leading factor is subnormal) nor touches factorials.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be finite and non-negative, got {lam}")
    c = _check_count(c)
    if lam == 0.0:
        return 1.0
    log_lam = math.log(lam)
    log_term = -lam  # k = 0
    log_sum = log_term
    for k in range(1, c + 1):
        log_term += log_lam - math.log(k)
        if log_term > log_sum:
            log_sum = log_term + math.log1p(math.exp(log_sum - log_term))
        else:
            log_sum += math.log1p(math.exp(log_term - log_sum))
    return min(1.0, math.exp(log_sum))


def lam_left(c: float, alpha: float) -> float:
    """Smallest Poisson mean guaranteeing Pr[Po(mean) <= c] <= alpha.

    Accepts real-valued ``c`` so the algebraic inversion against
    :func:`lam_right` can be exercised off the integer grid.
    """
    alpha = _check_prob_open(alpha)
    c = float(c)
    if c < 0:
        raise ValueError(f"c must be non-negative, got {c}")
    ell = math.log(1.0 / alpha)
    return c + ell + math.sqrt(2.0 * c * ell + ell * ell)


class LamRight(NamedTuple):
    """Right mean threshold plus its domain-validity flag.

    ``valid`` is False when ``c + 1 < 2 ln(1/alpha)``: below that the
    Chernoff argument behind the threshold has no feasible mean, so the
    value is returned for algebraic use but guarantees nothing.
    """

    value: float
    valid: bool


def lam_right(c: float, alpha: float) -> LamRight:
    """Largest Poisson mean guaranteeing Pr[Po(mean) >= c+1] <= alpha."""
    alpha = _check_prob_open(alpha)
    c = float(c)
    if c < 0:
        raise ValueError(f"c must be non-negative, got {c}")
    ell = math.log(1.0 / alpha)
    value = c + 1.0 - math.sqrt(2.0 * (c + 1.0) * ell)
    return LamRight(value, c + 1.0 >= 2.0 * ell)


@dataclass(frozen=True)
class OverheadSolution:
    """Count cutoff achieving lam_left(c, alpha) <= gamma * lam_right(c, beta).

    ``r`` is the larger root of the quadratic that the cutoff must clear;
    ``c`` additionally clears the right-tail domain condition
    c + 1 > 2 max(ln(1/alpha), ln(1/beta)).
    """

    alpha: float
    beta: float
    gamma: float
    r: float
    c: int


def overhead_c(alpha: float, beta: float, gamma: float) -> OverheadSolution:
    """Solve for the smallest convenient cutoff at tail ratio ``gamma``."""
    alpha = _check_prob_open(alpha)
    beta = _check_prob_open(beta, "beta")
    gamma = float(gamma)
    if not 1.0 < gamma <= 2.0:
        raise ValueError(f"gamma must lie in (1, 2], got {gamma}")
    a_log = math.log(1.0 / alpha)
    b_log = math.log(1.0 / beta)
    lin = math.sqrt(2.0 * a_log) + gamma * math.sqrt(2.0 * b_log)
    r = (lin + math.sqrt(lin * lin + 8.0 * (gamma - 1.0) * a_log)) / (2.0 * (gamma - 1.0))
    c = max(math.floor(2.0 * max(a_log, b_log)), math.ceil(r * r))
    return OverheadSolution(alpha=alpha, beta=beta, gamma=gamma, r=r, c=int(c))


# ---------------------------------------------------------------------------
# Samplers (inverse CDF; deterministic under a fixed RandomSource)
# ---------------------------------------------------------------------------


def sample_poisson(lam: float, rng: RandomSource, *, max_lambda: float | None = None) -> int:
    """Exact Poisson draw.

    Sequential inversion below :data:`POISSON_INVERSION_CROSSOVER`, numpy's
    transformed-rejection sampler above it. Means beyond the cap raise
    :class:`ResourceCapError` rather than attempting the draw.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be finite and non-negative, got {lam}")
    cap = max_lambda_cap() if max_lambda is None else float(max_lambda)
    if lam > cap:
        raise ResourceCapError(lam, cap, "Poisson draw")
    if lam == 0.0:
        return 0
    gen = rng.generator
    if lam < POISSON_INVERSION_CROSSOVER:
        u = _open_unit(gen)
        term = math.exp(-lam)
        cum = term
        k = 0
        while u > cum:
            k += 1
            term *= lam / k
            cum += term
            if term == 0.0:  # float tail exhausted; u can no longer exceed cum
                break
        return k
    return int(gen.poisson(lam))


def _check_scale(tau: float) -> float:
    tau = float(tau)
    if not math.isfinite(tau) or tau <= 0:
        raise ValueError(f"scale must be finite and positive, got {tau}")
    return tau


def sample_exponential(tau: float, rng: RandomSource, size: int | None = None):
    """Exp(tau) via inverse CDF: -tau * log(U), U in (0,1)."""
    tau = _check_scale(tau)
    u = _open_unit(rng.generator, size)
    if size is None:
        return -tau * math.log(u)
    return -tau * np.log(u)


def sample_laplace(tau: float, rng: RandomSource, size: int | None = None):
    """Lap(tau) via inverse CDF."""
    tau = _check_scale(tau)
    u = _open_unit(rng.generator, size)
    if size is None:
        if u < 0.5:
            return tau * math.log(2.0 * u)
        return -tau * math.log(2.0 * (1.0 - u))
    return np.where(u < 0.5, tau * np.log(2.0 * u), -tau * np.log(2.0 * (1.0 - u)))


def sample_bernoulli(p: float, rng: RandomSource, size: int | None = None):
    """Ber(p) draw(s) as 0/1 integers."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    gen = rng.generator
    if size is None:
        return 1 if gen.random() < p else 0
    return (gen.random(size) < p).astype(np.int64)


def sample_pareto(sigma: float, rng: RandomSource, size: int | None = None):
    """Par(sigma) on [1, inf): exp(eta/sigma) for eta ~ Exp(1), so Pr[w > u] = u^{-sigma}."""
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"sigma must be finite and positive, got {sigma}")
    eta = sample_exponential(1.0, rng, size)
    if size is None:
        return math.exp(eta / sigma)
    return np.exp(eta / sigma)


# ---------------------------------------------------------------------------
# Chernoff tail oracles (closed forms, used as independent test references)
# ---------------------------------------------------------------------------


def poisson_chernoff_upper(lam: float, u: float) -> float:
    """Additive upper tail: Pr[Po(lam) >= lam + u] <= exp(-u^2 / (2(lam+u)))."""
    if u < 0:
        raise ValueError("u must be non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam + u == 0:
        return 1.0
    return math.exp(-u * u / (2.0 * (lam + u)))


def poisson_chernoff_lower(lam: float, u: float) -> float:
    """Additive lower tail: Pr[Po(lam) <= lam - u] <= exp(-u^2 / (2 lam))."""
    if u < 0:
        raise ValueError("u must be non-negative")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return math.exp(-u * u / (2.0 * lam))


def poisson_chernoff_multiplicative(lam: float, c: float) -> float:
    """Multiplicative form: Pr[Po(lam) >= c] (c > lam) or <= c (c < lam) is
    at most e^{-lam} (e lam)^c / c^c."""
    if lam <= 0 or c <= 0:
        raise ValueError("lambda and c must be positive")
    return math.exp(c - lam - c * math.log(c / lam))


# ---------------------------------------------------------------------------
# Failure-probability weight sequence
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _series_constant(tol: float) -> float:
    """Upper estimate of zeta = sum_{j>=1} 1/(j ln^3(j+2)), certified to tol.

    Truncated summation plus a closed-form upper bound on the integral tail
    int_J^inf dx / (x ln^3(x+2)). The estimate is one-sided (>= the true
    sum), so downstream weights omega_t = 1/(zeta t ln^3(t+2)) always have
    partial sums <= 1. Absolute error is at most f(J) (the sum/integral
    sandwich width) plus an exponentially small integral slack.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")

    def f(j: float) -> float:
        return 1.0 / (j * math.log(j + 2.0) ** 3)

    j_max = 4096
    while f(j_max) > 0.45 * tol and j_max < (1 << 28):
        j_max *= 2

    partial = 0.0
    chunk = 1 << 16
    pieces = []
    lo = 1
    while lo <= j_max:
        hi = min(lo + chunk - 1, j_max)
        j = np.arange(lo, hi + 1, dtype=np.float64)
        pieces.append(float(np.sum(1.0 / (j * np.log(j + 2.0) ** 3))))
        lo = hi + 1
    partial = math.fsum(pieces)

    # Tail upper bound: substituting u = ln(x+2),
    #   int_J^inf = int_a^inf u^-3 / (1 - 2 e^-u) du
    #            <= 1/(2 a^2) + 2 E(a) / (1 - 2 e^-a),
    # with E(a) = int_a^inf e^-u u^-3 du = expn(3, a)/a^2.
    a = math.log(j_max + 2.0)
    exp_term = float(_special.expn(3, a)) / (a * a)
    tail_upper = 1.0 / (2.0 * a * a) + 2.0 * exp_term / (1.0 - 2.0 * math.exp(-a))
    return partial + tail_upper


@dataclass(frozen=True)
class WeightSequence:
    """Per-step weights omega_t = 1/(zeta t ln^3(t+2)) summing to one.

    ``beta(t)`` splits a global failure probability across an unbounded
    stream: sum_t beta(t) = beta_global (up to the series tolerance).
    """

    zeta: float
    beta_global: float
    tol: float = 1e-9

    def omega(self, t: int) -> float:
        if t < 1:
            raise ValueError(f"t must be >= 1, got {t}")
        return 1.0 / (self.zeta * t * math.log(t + 2.0) ** 3)

    def beta(self, t: int) -> float:
        return self.omega(t) * self.beta_global


def weight_sequence(beta_global: float, tol: float = 1e-9) -> WeightSequence:
    """Build the weight sequence, certifying the series constant to ``tol``."""
    beta_global = _check_prob_open(beta_global, "beta_global")
    if not tol > 0:
        raise ValueError("tol must be positive")
    return WeightSequence(_series_constant(tol), beta_global, tol)
