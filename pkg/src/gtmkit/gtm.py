"""The generalized thresholding mechanism.

A sequential tester that monitors a stream of black-box +/-1 mechanisms and
halts the first time the success probability appears to cross a target
threshold, while the entire output transcript stays differentially private.
Privacy comes from two one-sided exponential noise terms: a shared draw made
once at initialization and a fresh per-step draw, combined into a signed
offset that multiplicatively perturbs a Poissonized evaluation budget.

Two calibrations are provided: a global high-probability preset whose noise
penalty grows polynomially with the step index, and an ex-post preset whose
penalty stays constant while the realized privacy loss depends on whether
and when the run halts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Union

import numpy as np

from .dist import (
    RandomSource,
    WeightSequence,
    lam_left,
    lam_right,
    max_lambda_cap,
    overhead_c,
    sample_exponential,
    sample_poisson,
    weight_sequence,
)
from .errors import MechanismStateError, ResourceCapError

__all__ = [
    "BinaryOracle",
    "bernoulli_oracle",
    "constant_oracle",
    "negate_oracle",
    "GtmState",
    "StepParams",
    "StepOutcome",
    "gtm_init",
    "gtm_step",
    "GlobalUtilityPreset",
    "ExPostPreset",
    "PresetStep",
    "global_utility_step_params",
    "ex_post_step_params",
    "StepRecord",
    "Transcript",
    "run_stream",
    "init_from_preset",
]


class BinaryOracle:
    """A seedable black box emitting +/-1 draws for one (mechanism, dataset) pair.

    ``declared_eps``/``declared_delta`` record the privacy promise; the core
    treats the promise as given and only the audit module ever validates it.

    ``exact_p``, when known, is the exact success probability Pr[draw = +1].
    It enables a binomial shortcut for the +1 count among n draws (an
    identical distribution, since the count of successes in n independent
    draws is Binomial(n, p)). ``batch_fn(n, rng)`` optionally vectorizes n
    draws for oracles whose probability is not known in closed form.
    """

    __slots__ = ("draw_fn", "declared_eps", "declared_delta", "exact_p", "batch_fn")

    def __init__(
        self,
        draw_fn: Callable[[RandomSource], int],
        declared_eps: float,
        declared_delta: float = 0.0,
        exact_p: float | None = None,
        batch_fn: Callable[[int, RandomSource], np.ndarray] | None = None,
    ):
        if declared_eps < 0:
            raise ValueError(f"declared_eps must be non-negative, got {declared_eps}")
        if not 0.0 <= declared_delta < 1.0:
            raise ValueError(f"declared_delta must lie in [0, 1), got {declared_delta}")
        if exact_p is not None and not 0.0 <= exact_p <= 1.0:
            raise ValueError(f"exact_p must lie in [0, 1], got {exact_p}")
        self.draw_fn = draw_fn
        self.declared_eps = float(declared_eps)
        self.declared_delta = float(declared_delta)
        self.exact_p = None if exact_p is None else float(exact_p)
        self.batch_fn = batch_fn

    def draw(self, rng: RandomSource) -> int:
        return self.draw_fn(rng)

    def draw_batch(self, n: int, rng: RandomSource) -> np.ndarray | None:
        if self.batch_fn is None:
            return None
        return self.batch_fn(n, rng)


def bernoulli_oracle(p: float, eps: float, delta: float = 0.0) -> BinaryOracle:
    """Oracle with success probability exactly ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def draw(rng: RandomSource) -> int:
        return 1 if rng.generator.random() < p else -1

    def batch(n: int, rng: RandomSource) -> np.ndarray:
        return np.where(rng.generator.random(n) < p, 1, -1)

    return BinaryOracle(draw, eps, delta, exact_p=p, batch_fn=batch)


def constant_oracle(value: int) -> BinaryOracle:
    """Oracle that always outputs ``value`` (perfectly private: eps = 0)."""
    if value not in (-1, 1):
        raise ValueError("value must be -1 or +1")
    p = 1.0 if value == 1 else 0.0
    return BinaryOracle(lambda rng: value, 0.0, 0.0, exact_p=p,
                        batch_fn=lambda n, rng: np.full(n, value, dtype=np.int64))


def negate_oracle(oracle: BinaryOracle) -> BinaryOracle:
    """Flip the oracle's sign; success probability becomes 1 - p."""

    def draw(rng: RandomSource) -> int:
        return -oracle.draw(rng)

    batch_fn = None
    if getattr(oracle, "batch_fn", None) is not None:
        def batch_fn(n: int, rng: RandomSource):
            ys = oracle.draw_batch(n, rng)
            return None if ys is None else -np.asarray(ys)

    p = getattr(oracle, "exact_p", None)
    return BinaryOracle(
        draw,
        oracle.declared_eps,
        oracle.declared_delta,
        exact_p=None if p is None else 1.0 - p,
        batch_fn=batch_fn,
    )


# ---------------------------------------------------------------------------
# Core state machine
# ---------------------------------------------------------------------------


@dataclass
class GtmState:
    """Persistent mechanism state.

    ``eta1`` is drawn exactly once at initialization and shared across every
    step; after ``halted`` is set, further steps are rejected.
    """

    tau1: float
    mu1: float
    eta1: float
    t: int = 1
    halted: bool = False


@dataclass(frozen=True)
class StepParams:
    """Per-step tuning: privacy parameter, noise scale, cutoff, base rate, direction."""

    eps_t: float
    tau2_t: float
    c_t: int
    rho_t: float
    s_t: int

    def __post_init__(self):
        if self.eps_t < 0:
            raise ValueError(f"eps_t must be non-negative, got {self.eps_t}")
        if not self.tau2_t > 0:
            raise ValueError(f"tau2_t must be positive, got {self.tau2_t}")
        if isinstance(self.c_t, bool) or not isinstance(self.c_t, (int, np.integer)) or self.c_t < 0:
            raise ValueError(f"c_t must be a non-negative integer, got {self.c_t!r}")
        if not self.rho_t > 0:
            raise ValueError(f"rho_t must be positive, got {self.rho_t}")
        if self.s_t not in (-1, 1):
            raise ValueError(f"s_t must be -1 or +1, got {self.s_t}")


@dataclass(frozen=True)
class StepOutcome:
    """Diagnostic record of one step.

    ``a_t == s_t`` means the step halted. ``lambda_t`` is the realized
    Poisson mean rho_t * exp(eps_t * Z_t), bit-for-bit.
    """

    t: int
    a_t: int
    N_t: int
    K_t: int
    lambda_t: float
    Z_t: float
    eta2_t: float


def gtm_init(tau1: float, mu1: float, rng: RandomSource) -> GtmState:
    """Draw the shared noise eta1 ~ Exp(tau1) and open the stream at t = 1."""
    if not tau1 > 0:
        raise ValueError(f"tau1 must be positive, got {tau1}")
    if not mu1 > 0:
        raise ValueError(f"mu1 must be positive, got {mu1}")
    return GtmState(tau1=float(tau1), mu1=float(mu1), eta1=sample_exponential(tau1, rng))


def _count_successes(oracle, n: int, rng: RandomSource) -> int:
    if n == 0:
        return 0
    p = getattr(oracle, "exact_p", None)
    if p is not None:
        return int(rng.generator.binomial(n, p))
    ys = oracle.draw_batch(n, rng) if hasattr(oracle, "draw_batch") else None
    if ys is not None:
        return int(np.count_nonzero(np.asarray(ys) == 1))
    k = 0
    for _ in range(n):
        if oracle.draw(rng) == 1:
            k += 1
    return k


def gtm_step(
    state: GtmState,
    oracle: BinaryOracle,
    params: StepParams,
    rng: RandomSource,
    *,
    max_lambda: float | None = None,
) -> StepOutcome:
    """Run one step: fresh noise, Poissonized evaluation count, halting test.

    Draws are consumed sequentially from ``rng``; callers wanting
    reproducibility across code paths should pass a dedicated split per step.
    An infinite ``tau2_t`` denotes the eps_t = 0 degenerate case where the
    fresh noise cannot influence the mean; no draw is made for it.
    """
    if state.halted:
        raise MechanismStateError("gtm_step called after the mechanism halted")
    if math.isfinite(params.tau2_t):
        eta2 = sample_exponential(params.tau2_t, rng)
    else:
        eta2 = 0.0
    z = params.s_t * (state.mu1 - state.eta1 + eta2)
    lam = params.rho_t * math.exp(params.eps_t * z)
    cap = max_lambda_cap() if max_lambda is None else float(max_lambda)
    if lam > cap:
        state.halted = True  # run aborted; reject further steps
        raise ResourceCapError(lam, cap, f"step t={state.t}")
    n = sample_poisson(lam, rng, max_lambda=cap)
    k = _count_successes(oracle, n, rng)
    halt = params.s_t * (k - params.c_t - 0.5) > 0
    outcome = StepOutcome(
        t=state.t,
        a_t=params.s_t if halt else -params.s_t,
        N_t=n,
        K_t=k,
        lambda_t=lam,
        Z_t=z,
        eta2_t=eta2,
    )
    state.t += 1
    if halt:
        state.halted = True
    return outcome


# ---------------------------------------------------------------------------
# Calibrated presets
# ---------------------------------------------------------------------------


class PresetStep(NamedTuple):
    params: StepParams
    Lambda_t: float
    p_bar_t: float
    ex_post_loss_on_halt: float | None


def _flip_direction(gamma: float, Lambda_t: float, p_star: float) -> int:
    # Direct mode wins strictly; ties route to the flipped mode.
    return 1 if gamma * Lambda_t * (1.0 - p_star) > p_star else -1


def _rejection_threshold(gamma: float, Lambda_t: float, p_star: float) -> float:
    return max(p_star / (gamma * Lambda_t), 1.0 - gamma * Lambda_t * (1.0 - p_star))


@dataclass(frozen=True)
class GlobalUtilityPreset:
    """Uniform high-probability calibration.

    Splits the privacy budget as 1/tau1 = theta*eps/(theta+2) and
    2/tau2 = 2*eps/(theta+2), so 1/tau1 + 2/tau2 = eps exactly, and sets the
    calibration offset mu1 so the shared noise exceeds it with probability
    beta/4.
    """

    eps: float
    theta: float
    gamma: float
    beta: float
    weights: WeightSequence | None = None
    tau1: float = field(init=False)
    tau2: float = field(init=False)
    mu1: float = field(init=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 1.0 < self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in (1, 2], got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        weights = self.weights
        if weights is None:
            weights = weight_sequence(self.beta)
        elif weights.beta_global != self.beta:
            raise ValueError("weights.beta_global must equal the preset beta")
        object.__setattr__(self, "weights", weights)
        tau1 = (self.theta + 2.0) / (self.theta * self.eps)
        tau2 = (self.theta + 2.0) / self.eps
        object.__setattr__(self, "tau1", tau1)
        object.__setattr__(self, "tau2", tau2)
        object.__setattr__(self, "mu1", tau1 * math.log(4.0 / self.beta))

    def step_params(self, t: int, eps_t: float, p_star_t: float) -> PresetStep:
        return global_utility_step_params(self, t, eps_t, p_star_t)


def global_utility_step_params(
    preset: GlobalUtilityPreset, t: int, eps_t: float, p_star_t: float
) -> PresetStep:
    """Noise penalty, direction, cutoff and base rate for one step.

    The direction rule compares the two available rejection thresholds and
    runs the flipped (below-threshold, negated-oracle) mode whenever the
    target sits close enough to one for that mode to win.
    """
    if not 0.0 < p_star_t < 1.0:
        raise ValueError(f"p_star_t must lie strictly in (0, 1), got {p_star_t}")
    if eps_t < 0:
        raise ValueError(f"eps_t must be non-negative, got {eps_t}")
    beta_t = preset.weights.beta(t)
    ratio = eps_t / preset.eps
    lam_penalty = (4.0 / preset.beta) ** (ratio * (1.0 + 2.0 / preset.theta)) * (
        4.0 / beta_t
    ) ** (ratio * (2.0 + preset.theta))
    s = _flip_direction(preset.gamma, lam_penalty, p_star_t)
    p_bar = _rejection_threshold(preset.gamma, lam_penalty, p_star_t)
    b4 = beta_t / 4.0
    sol = overhead_c(b4, b4, preset.gamma)
    if s == 1:
        rho = lam_left(sol.c, b4) / p_star_t
    else:
        rho = lam_right(sol.c, b4).value / (1.0 - p_star_t)
    params = StepParams(eps_t=eps_t, tau2_t=preset.tau2, c_t=sol.c, rho_t=rho, s_t=s)
    return PresetStep(params, lam_penalty, p_bar, None)


@dataclass(frozen=True)
class ExPostPreset:
    """Constant noise-penalty calibration with output-dependent privacy loss.

    The per-step noise scale is chosen so the fresh-noise contribution to
    the penalty cancels to exp(2/C_H) exactly; the realized privacy loss is
    eps_C of the shared noise plus, only on the halting step, the fresh
    2/tau2_t term.
    """

    eps_C: float
    C_H: float
    gamma: float
    beta: float
    weights: WeightSequence | None = None
    tau1: float = field(init=False)
    mu1: float = field(init=False)

    def __post_init__(self):
        if not self.eps_C > 0:
            raise ValueError(f"eps_C must be positive, got {self.eps_C}")
        if not self.C_H > 0:
            raise ValueError(f"C_H must be positive, got {self.C_H}")
        if not 1.0 < self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in (1, 2], got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        weights = self.weights
        if weights is None:
            weights = weight_sequence(self.beta)
        elif weights.beta_global != self.beta:
            raise ValueError("weights.beta_global must equal the preset beta")
        object.__setattr__(self, "weights", weights)
        tau1 = 1.0 / self.eps_C
        object.__setattr__(self, "tau1", tau1)
        object.__setattr__(self, "mu1", tau1 * math.log(4.0 / self.beta))

    def step_params(self, t: int, eps_t: float, p_star_t: float) -> PresetStep:
        return ex_post_step_params(self, t, eps_t, p_star_t)


def ex_post_step_params(
    preset: ExPostPreset, t: int, eps_t: float, p_star_t: float
) -> PresetStep:
    """Per-step parameters under the ex-post calibration.

    eps_t = 0 is served with tau2_t = +inf: the fresh noise is then
    irrelevant (eps_t * Z_t = 0) and the halting step adds no privacy loss.
    """
    if not 0.0 < p_star_t < 1.0:
        raise ValueError(f"p_star_t must lie strictly in (0, 1), got {p_star_t}")
    if eps_t < 0:
        raise ValueError(f"eps_t must be non-negative, got {eps_t}")
    beta_t = preset.weights.beta(t)
    log_noise = math.log(4.0 / beta_t)
    if eps_t == 0.0:
        tau2_t = math.inf
        lam_penalty = math.exp(2.0 / preset.C_H)
        loss_on_halt = preset.eps_C
    else:
        tau2_t = 2.0 / (preset.C_H * eps_t * log_noise)
        lam_penalty = (4.0 / preset.beta) ** (eps_t / preset.eps_C) * math.exp(2.0 / preset.C_H)
        loss_on_halt = preset.eps_C + preset.C_H * eps_t * log_noise
    s = _flip_direction(preset.gamma, lam_penalty, p_star_t)
    p_bar = _rejection_threshold(preset.gamma, lam_penalty, p_star_t)
    b6 = beta_t / 6.0
    sol = overhead_c(b6, b6, preset.gamma)
    if s == 1:
        rho = lam_left(sol.c, b6) / p_star_t
    else:
        rho = lam_right(sol.c, b6).value / (1.0 - p_star_t)
    params = StepParams(eps_t=eps_t, tau2_t=tau2_t, c_t=sol.c, rho_t=rho, s_t=s)
    return PresetStep(params, lam_penalty, p_bar, loss_on_halt)


def init_from_preset(
    preset: Union[GlobalUtilityPreset, ExPostPreset], rng: RandomSource
) -> GtmState:
    return gtm_init(preset.tau1, preset.mu1, rng)


# ---------------------------------------------------------------------------
# Stream runner
# ---------------------------------------------------------------------------

#: One stream entry: the mechanism to test, its target threshold, and the
#: privacy parameter it promises.
StepSpec = tuple[BinaryOracle, float, float]


@dataclass(frozen=True)
class StepRecord:
    t: int
    params: StepParams
    outcome: StepOutcome
    Lambda_t: float
    p_bar_t: float
    ex_post_loss_on_halt: float | None


@dataclass
class Transcript:
    """Per-step records ending at the first halt or stream exhaustion."""

    records: list[StepRecord]

    @property
    def actions(self) -> tuple[int, ...]:
        return tuple(r.outcome.a_t for r in self.records)

    @property
    def halted(self) -> bool:
        if not self.records:
            return False
        last = self.records[-1]
        return last.outcome.a_t == last.params.s_t

    @property
    def halt_step(self) -> int | None:
        return self.records[-1].t if self.halted else None

    def __len__(self) -> int:
        return len(self.records)


def _pull(stream, actions: tuple[int, ...], it: Iterator | None):
    if it is not None:
        return next(it, None)
    return stream(actions)


def run_stream(
    state: GtmState,
    stream: Union[Iterable[StepSpec], Callable[[tuple[int, ...]], Optional[StepSpec]]],
    preset: Union[GlobalUtilityPreset, ExPostPreset],
    rng: RandomSource,
    *,
    max_lambda: float | None = None,
) -> Transcript:
    """Drive the mechanism over a stream of (oracle, p_star_t, eps_t) entries.

    ``stream`` may be a plain iterable or a callable receiving the prior
    transcript prefix and returning the next entry (or None to stop), which
    lets an adaptive analyst react to earlier outputs without the core
    holding any analyst state. Whenever the preset picks the flipped
    direction for a step, the oracle is negated before evaluation so the
    halting semantics stay "halt once the success probability reaches the
    target".
    """
    it = iter(stream) if not callable(stream) else None
    records: list[StepRecord] = []
    actions: list[int] = []
    while not state.halted:
        spec = _pull(stream, tuple(actions), it)
        if spec is None:
            break
        oracle, p_star_t, eps_t = spec
        step = preset.step_params(state.t, eps_t, p_star_t)
        run_oracle = negate_oracle(oracle) if step.params.s_t == -1 else oracle
        outcome = gtm_step(state, run_oracle, step.params, rng, max_lambda=max_lambda)
        records.append(
            StepRecord(
                t=outcome.t,
                params=step.params,
                outcome=outcome,
                Lambda_t=step.Lambda_t,
                p_bar_t=step.p_bar_t,
                ex_post_loss_on_halt=step.ex_post_loss_on_halt,
            )
        )
        actions.append(outcome.a_t)
    return Transcript(records)
