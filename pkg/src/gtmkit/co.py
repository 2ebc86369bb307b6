"""Batch-to-continual-observation reduction for monotone maximization.

Wraps a black-box batch DP optimizer so that a solution can be republished
after every insertion into a data stream while the whole output sequence
stays differentially private. A geometric ladder of quality thresholds is
monitored by thresholding-mechanism instances; when the current rung is
beaten, a thresholded selection call regenerates the published solution and
the ladder advances. Privacy is budgeted per rung through a convergent
weight sequence, so the total cost stays within the global (eps, delta) no
matter how long the stream runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Iterable

import numpy as np
from scipy import special as _special

from .dist import RandomSource, sample_laplace, weight_sequence
from .gtm import (
    BinaryOracle,
    ExPostPreset,
    GtmState,
    ex_post_step_params,
    gtm_init,
    gtm_step,
)
from .purify import purify_default
from .select import ScoredOracle, TSelectConfig, t_select

__all__ = [
    "MonotoneProblem",
    "BatchGuarantee",
    "BatchAlgorithm",
    "CoWeights",
    "co_weights",
    "CoConfig",
    "CheckpointEntry",
    "PrivacyLedger",
    "CoStepRecord",
    "CoRun",
    "make_test_oracle",
    "make_scored_oracle",
    "run_co",
    "exp_to_prob",
    "accuracy_bound",
]


@dataclass(frozen=True)
class MonotoneProblem:
    """A sensitivity-1, data-monotone maximization problem.

    ``evaluate(dataset, candidate)`` must change by at most 1 across
    neighboring datasets and be non-decreasing along an insertion-only
    stream. ``opt`` is a test-only oracle for the exact optimum.
    """

    candidates: tuple
    evaluate: Callable[[Any, Any], float]
    opt: Callable[[Any], float]


@dataclass(frozen=True)
class BatchGuarantee:
    """Declared accuracy of a batch optimizer.

    kind "high-probability": f(X, Y) >= alpha * OPT - error_fn(eps, delta, beta_A)
    with probability 1 - beta_A. kind "in-expectation": the same bound on the
    expectation, with beta_A unused.
    """

    kind: str
    alpha: float
    error_fn: Callable[[float, float, float | None], float]
    beta_A: float | None = None

    def __post_init__(self):
        if self.kind not in ("high-probability", "in-expectation"):
            raise ValueError(f"unknown guarantee kind {self.kind!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class BatchAlgorithm:
    """Black-box batch DP optimizer: run(dataset, eps, delta, rng) -> candidate.

    ``run_batch`` optionally vectorizes n independent runs; it must produce
    the same per-run distribution as ``run``.
    """

    run: Callable[[Any, float, float, RandomSource], Any]
    guarantee: BatchGuarantee
    run_batch: Callable[[Any, float, float, int, RandomSource], np.ndarray] | None = None


def exp_to_prob(alpha: float, expected_error: float, c: float) -> tuple[float, float]:
    """Convert an in-expectation guarantee to a bounded-error one.

    Returns (alpha', beta_c) = ((1-c) * alpha, 1 - c * alpha): the algorithm
    reaches alpha' * OPT - expected_error with probability >= 1 - beta_c.
    When wiring an in-expectation optimizer into the reduction, the target
    threshold becomes p_star = c * alpha / 2.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if expected_error < 0:
        raise ValueError(f"expected_error must be non-negative, got {expected_error}")
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    return (1.0 - c) * alpha, 1.0 - c * alpha


# ---------------------------------------------------------------------------
# Checkpoint weight sequence (ln^2 decay; heavier early mass than the
# per-step ln^3 weights used inside each thresholding instance)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _co_series_constant(tol: float) -> float:
    """Upper estimate of sum_{j>=1} 1/(j ln^2(j+1)), certified to tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")

    def f(j: float) -> float:
        return 1.0 / (j * math.log(j + 1.0) ** 2)

    j_max = 4096
    while f(j_max) > 0.45 * tol and j_max < (1 << 28):
        j_max *= 2

    pieces = []
    chunk = 1 << 16
    lo = 1
    while lo <= j_max:
        hi = min(lo + chunk - 1, j_max)
        j = np.arange(lo, hi + 1, dtype=np.float64)
        pieces.append(float(np.sum(1.0 / (j * np.log(j + 1.0) ** 2))))
        lo = hi + 1
    partial = math.fsum(pieces)

    # Tail: with u = ln(x+1), int_J^inf = int_a^inf u^-2 / (1 - e^-u) du
    #   <= 1/a + E(a) / (1 - e^-a), E(a) = int_a^inf e^-u u^-2 du = expn(2, a)/a.
    a = math.log(j_max + 1.0)
    exp_term = float(_special.expn(2, a)) / a
    tail_upper = 1.0 / a + exp_term / (1.0 - math.exp(-a))
    return partial + tail_upper


@dataclass(frozen=True)
class CoWeights:
    """omega_i = C_omega / (i ln^2(i+1)) with sum_i omega_i <= 1."""

    c_omega: float

    def omega(self, i: int) -> float:
        if i < 1:
            raise ValueError(f"index must be >= 1, got {i}")
        return self.c_omega / (i * math.log(i + 1.0) ** 2)


def co_weights(tol: float = 1e-9) -> CoWeights:
    return CoWeights(1.0 / _co_series_constant(tol))


# ---------------------------------------------------------------------------
# Configuration and ledgers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoConfig:
    """All tunables of the reduction plus the derived budget constants.

    C_eps is sized so one instance's monitoring plus its selection call cost
    at most omega_ell * eps together; C_delta makes the additive losses sum
    to at most delta.
    """

    eps: float
    delta: float
    p_star: float
    kappa: float
    gamma: float
    beta: float
    C1: float = 4.0
    C_H: float = 4.0
    C_beta: float = 1.0 / 3.0
    series_tol: float = 1e-9
    C_eps: float = field(init=False)
    C_delta: float = field(init=False)
    Lambda: float = field(init=False)
    p_bar: float = field(init=False)
    weights: CoWeights = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0.0 < self.p_star <= 0.5:
            raise ValueError(f"p_star must lie in (0, 1/2], got {self.p_star}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 1.0 < self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in (1, 2], got {self.gamma}")
        if not 0.0 < self.beta < 1.0 / math.e:
            raise ValueError(f"beta must lie in (0, 1/e), got {self.beta}")
        if not self.C1 > 0:
            raise ValueError(f"C1 must be positive, got {self.C1}")
        if not self.C_H > 0:
            raise ValueError(f"C_H must be positive, got {self.C_H}")
        if not 0.0 < self.C_beta <= 1.0 / 3.0:
            raise ValueError(f"C_beta must lie in (0, 1/3], got {self.C_beta}")
        c_eps = self.C1 / (self.C1 + self.C_H + 3.0)
        lam = math.exp(1.0 / self.C1 + 2.0 / self.C_H)
        object.__setattr__(self, "C_eps", c_eps)
        object.__setattr__(self, "C_delta", 1.0 + 3.0 * math.exp(3.0) / self.C_beta)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "p_bar", self.p_star / (self.gamma * lam))
        object.__setattr__(self, "weights", co_weights(self.series_tol))

    def h(self, i: int) -> float:
        return (1.0 + self.kappa) ** i

    def eps_ell(self, i: int) -> float:
        return self.C_eps * self.weights.omega(i) * self.eps

    def beta_ell(self, i: int) -> float:
        return self.C_beta * self.weights.omega(i) * self.beta

    def xi_ell(self, i: int) -> float:
        return self.p_bar * self.beta_ell(i)

    def eps_step(self, i: int, t: int) -> float:
        return self.eps_ell(i) / (self.C1 * math.log(4.0 / (self.weights.omega(t) * self.beta)))

    def delta_step(self, i: int, t: int) -> float:
        if self.delta == 0.0:
            return 0.0
        by_budget = self.p_bar * self.weights.omega(i) ** 2 * self.beta * self.delta / self.C_delta
        by_slack = (self.p_bar / 2.0) * self.eps_step(i, t)
        return min(by_budget, by_slack)


@dataclass
class CheckpointEntry:
    """One rung advance: when it fired and what the selection call did."""

    ell: int
    t_of_ell: int
    h_ell: float
    eps_ell: float
    beta_ell: float
    xi_ell: float
    solution: Any
    tselect_draws: int
    tselect_failed: bool
    eps_step: float
    delta_step: float


@dataclass
class PrivacyLedger:
    """Formula-level privacy charges, accumulated per run.

    Charges use the budget formulas (which dominate the realized costs):
    eps(1,1) for the initial batch call, (1 + C_H/C1) * eps(ell) per
    monitoring instance, 3 * eps(ell)/C1 plus the kill-coin-amplified delta
    per selection call.
    """

    entries: list[tuple[str, float, float]] = field(default_factory=list)

    def charge(self, label: str, eps_cost: float, delta_cost: float = 0.0) -> None:
        self.entries.append((label, eps_cost, delta_cost))

    @property
    def eps_total(self) -> float:
        return math.fsum(e for _, e, _ in self.entries)

    @property
    def delta_total(self) -> float:
        return math.fsum(d for _, _, d in self.entries)

    def within(self, eps: float, delta: float, slack: float = 1e-12) -> bool:
        return self.eps_total <= eps + slack and self.delta_total <= delta + slack


@dataclass
class CoStepRecord:
    """Per-step output row: published solution plus monitoring diagnostics."""

    t: int
    solution: Any
    ell_active: int
    n_checkpoints: int
    checkpoint: bool
    a_t: int
    gtm_draws: int
    tselect_draws: int
    batch_calls: int
    eps_step: float
    delta_step: float
    h: float
    lambda_t: float
    Lambda_t: float
    utility: float | None = None
    opt: float | None = None


@dataclass
class CoRun:
    config: CoConfig
    records: list[CoStepRecord]
    checkpoints: list[CheckpointEntry]
    ledger: PrivacyLedger

    @property
    def solutions(self) -> list[Any]:
        return [r.solution for r in self.records]


# ---------------------------------------------------------------------------
# Test and scored mechanisms built from the batch optimizer
# ---------------------------------------------------------------------------


def _value_lookup(problem: MonotoneProblem, dataset) -> tuple[dict, np.ndarray | None]:
    table = {y: problem.evaluate(dataset, y) for y in problem.candidates}
    dense = None
    if all(isinstance(y, (int, np.integer)) for y in problem.candidates):
        if tuple(problem.candidates) == tuple(range(len(problem.candidates))):
            dense = np.array([table[y] for y in problem.candidates], dtype=np.float64)
    return table, dense


def make_test_oracle(
    problem: MonotoneProblem,
    dataset,
    batch: BatchAlgorithm,
    eps_t: float,
    delta_t: float,
    h: float,
) -> BinaryOracle:
    """One draw = one batch run at eps_t/2 plus a Laplace(2/eps_t)-noised
    threshold test of its value against ``h``. Declared cost (eps_t, delta_t)
    by basic composition of the run and the noised evaluation."""
    if not eps_t > 0:
        raise ValueError(f"eps_t must be positive, got {eps_t}")
    scale = 2.0 / eps_t

    def draw(rng: RandomSource) -> int:
        y = batch.run(dataset, eps_t / 2.0, delta_t, rng)
        v = problem.evaluate(dataset, y) + sample_laplace(scale, rng)
        return 1 if v >= h else -1

    batch_fn = None
    if batch.run_batch is not None:
        table, dense = _value_lookup(problem, dataset)

        def batch_fn(n: int, rng: RandomSource) -> np.ndarray:
            ys = batch.run_batch(dataset, eps_t / 2.0, delta_t, n, rng)
            arr = np.asarray(ys)
            if dense is not None and arr.dtype.kind in "iu":
                values = dense[arr]
            else:
                values = np.fromiter((table[y] for y in ys), dtype=np.float64, count=len(arr))
            noise = sample_laplace(scale, rng, size=len(arr))
            return np.where(values + noise >= h, 1, -1)

    return BinaryOracle(draw, eps_t, delta_t, exact_p=None, batch_fn=batch_fn)


def make_scored_oracle(
    problem: MonotoneProblem,
    dataset,
    batch: BatchAlgorithm,
    eps_t: float,
    delta_t: float,
) -> ScoredOracle:
    """One draw = one batch run plus its Laplace(2/eps_t)-noised value."""
    if not eps_t > 0:
        raise ValueError(f"eps_t must be positive, got {eps_t}")
    scale = 2.0 / eps_t

    def draw(rng: RandomSource) -> tuple[Any, float]:
        y = batch.run(dataset, eps_t / 2.0, delta_t, rng)
        return y, problem.evaluate(dataset, y) + sample_laplace(scale, rng)

    return ScoredOracle(draw, eps_t, delta_t)


# ---------------------------------------------------------------------------
# The reduction
# ---------------------------------------------------------------------------


def _new_instance(config: CoConfig, ell: int, rng: RandomSource) -> tuple[GtmState, ExPostPreset]:
    preset = ExPostPreset(
        eps_C=config.eps_ell(ell),
        C_H=config.C_H,
        gamma=config.gamma,
        beta=config.beta_ell(ell),
        weights=weight_sequence(config.beta_ell(ell), config.series_tol),
    )
    state = gtm_init(preset.tau1, preset.mu1, rng)
    return state, preset


def run_co(
    problem: MonotoneProblem,
    stream: Iterable[Any],
    batch: BatchAlgorithm,
    config: CoConfig,
    rng: RandomSource,
    *,
    max_lambda: float | None = None,
    collect_utility: bool = True,
) -> CoRun:
    """Monitor an insertion-only stream of dataset snapshots.

    At time 1 the published solution is a single batch run. From time 2 on,
    the active monitoring instance tests whether the batch optimizer now
    beats the current rung h_ell; on continue the previous solution is
    republished, on halt a thresholded selection call regenerates it (a
    failed selection keeps the old solution but the ladder still advances).
    Approximate-DP batch calls are purified before monitoring, so every
    instance consumes pure-DP draws.
    """
    ledger = PrivacyLedger()
    records: list[CoStepRecord] = []
    checkpoints: list[CheckpointEntry] = []

    it = iter(stream)
    first = next(it, None)
    if first is None:
        return CoRun(config, records, checkpoints, ledger)

    eps_init = config.eps_step(1, 1)
    delta_init = config.delta_step(1, 1)
    y_cur = batch.run(first, eps_init, delta_init, rng.split(0))
    ledger.charge("init", eps_init, delta_init)
    records.append(
        CoStepRecord(
            t=1,
            solution=y_cur,
            ell_active=2,
            n_checkpoints=0,
            checkpoint=False,
            a_t=0,
            gtm_draws=0,
            tselect_draws=0,
            batch_calls=1,
            eps_step=eps_init,
            delta_step=delta_init,
            h=config.h(1),
            lambda_t=0.0,
            Lambda_t=1.0,
            utility=problem.evaluate(first, y_cur) if collect_utility else None,
            opt=problem.opt(first) if collect_utility else None,
        )
    )

    ell = 2
    state, preset = _new_instance(config, ell, rng.split(3, ell))
    ledger.charge(f"gtm[{ell}]", (1.0 + config.C_H / config.C1) * config.eps_ell(ell))

    t = 1
    for dataset in it:
        t += 1
        eps_t = config.eps_step(ell, t)
        delta_t = config.delta_step(ell, t)
        h = config.h(ell)
        oracle = make_test_oracle(problem, dataset, batch, eps_t, delta_t, h)
        if delta_t > 0:
            oracle = purify_default(oracle, eps_t, delta_t)
        step = ex_post_step_params(preset, state.t, eps_t, config.p_star)
        # p_star <= 1/2 forces the direct (above-threshold) mode.
        assert step.params.s_t == 1
        outcome = gtm_step(state, oracle, step.params, rng.split(1, t), max_lambda=max_lambda)

        tsel_draws = 0
        is_checkpoint = outcome.a_t == 1
        if is_checkpoint:
            scored = make_scored_oracle(problem, dataset, batch, eps_t, delta_t)
            tsel_cfg = TSelectConfig(tau=h, xi=config.xi_ell(ell), eps0=min(eps_t, 1.0))
            result = t_select(scored, tsel_cfg, rng.split(2, t))
            tsel_draws = result.draws
            ledger.charge(
                f"tselect[{ell}]",
                3.0 * config.eps_ell(ell) / config.C1,
                3.0 * math.exp(3.0) * delta_t / config.xi_ell(ell),
            )
            if not result.failed:
                y_cur = result.candidate
            checkpoints.append(
                CheckpointEntry(
                    ell=ell,
                    t_of_ell=t,
                    h_ell=h,
                    eps_ell=config.eps_ell(ell),
                    beta_ell=config.beta_ell(ell),
                    xi_ell=config.xi_ell(ell),
                    solution=y_cur,
                    tselect_draws=tsel_draws,
                    tselect_failed=result.failed,
                    eps_step=eps_t,
                    delta_step=delta_t,
                )
            )
            ell += 1
            state, preset = _new_instance(config, ell, rng.split(3, ell))
            ledger.charge(f"gtm[{ell}]", (1.0 + config.C_H / config.C1) * config.eps_ell(ell))

        records.append(
            CoStepRecord(
                t=t,
                solution=y_cur,
                ell_active=ell,
                n_checkpoints=len(checkpoints),
                checkpoint=is_checkpoint,
                a_t=outcome.a_t,
                gtm_draws=outcome.N_t,
                tselect_draws=tsel_draws,
                batch_calls=outcome.N_t + tsel_draws,
                eps_step=eps_t,
                delta_step=delta_t,
                h=h,
                lambda_t=outcome.lambda_t,
                Lambda_t=step.Lambda_t,
                utility=problem.evaluate(dataset, y_cur) if collect_utility else None,
                opt=problem.opt(dataset) if collect_utility else None,
            )
        )
    return CoRun(config, records, checkpoints, ledger)


def accuracy_bound(config: CoConfig, record: CoStepRecord, checkpoint_t: int | None,
                   batch_error: float) -> float:
    """Additive error term of the utility guarantee at one step.

    The published solution satisfies
        f(X_t, Y_t) >= OPT_t / (1 + kappa) - accuracy_bound(...)
    with the advertised probability. ``checkpoint_t`` is the time of the most
    recent rung advance (None before the first one); ``batch_error`` is the
    batch optimizer's additive error at the privacy parameters in effect.
    """
    kappa = config.kappa
    ell = record.ell_active
    # Continuation slack of the active instance at time t.
    cont = (2.0 / ((1.0 + kappa) * config.eps_step(ell, record.t))) * math.log(1.0 / config.p_bar)
    total = batch_error / (1.0 + kappa) + cont
    if checkpoint_t is None:
        # No rung advanced yet: only the first two rungs bound the value.
        total += (1.0 + kappa) ** 2
        return total
    ell_last = ell - 1
    eps_cp = config.eps_step(ell_last, checkpoint_t)
    total += (4.0 / eps_cp) * math.log(1.0 / (config.weights.omega(ell_last) * config.beta))
    total += (2.0 / eps_cp) * math.log(4.0 / config.p_bar)
    return total
