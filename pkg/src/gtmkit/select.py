"""Thresholded private selection with random stopping.

Repeatedly samples a scored mechanism until a draw clears a known threshold,
killing the loop with a small probability after every miss. The kill coin is
what keeps the privacy cost of success-probability amplification essentially
independent of the number of draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .dist import RandomSource, sample_bernoulli

__all__ = ["ScoredOracle", "TSelectConfig", "TSelectResult", "t_select", "iteration_cap"]


class ScoredOracle:
    """Black box emitting (candidate, score) pairs, i.i.d. across draws."""

    __slots__ = ("draw_fn", "declared_eps", "declared_delta")

    def __init__(
        self,
        draw_fn: Callable[[RandomSource], tuple[Any, float]],
        declared_eps: float,
        declared_delta: float = 0.0,
    ):
        if declared_eps < 0:
            raise ValueError(f"declared_eps must be non-negative, got {declared_eps}")
        if not 0.0 <= declared_delta < 1.0:
            raise ValueError(f"declared_delta must lie in [0, 1), got {declared_delta}")
        self.draw_fn = draw_fn
        self.declared_eps = float(declared_eps)
        self.declared_delta = float(declared_delta)

    def draw(self, rng: RandomSource) -> tuple[Any, float]:
        return self.draw_fn(rng)


def iteration_cap(xi: float, eps0: float) -> int:
    """T = ceil(max((1/xi) ln(2/eps0), 1 + 1/(e*xi)))."""
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"xi must lie in (0, 1], got {xi}")
    if not eps0 > 0:
        raise ValueError(f"eps0 must be positive, got {eps0}")
    return math.ceil(max(math.log(2.0 / eps0) / xi, 1.0 + 1.0 / (math.e * xi)))


@dataclass(frozen=True)
class TSelectConfig:
    """Threshold, stopping probability, auxiliary loss parameter, iteration cap.

    The privacy analysis behind the recorded cost metadata assumes
    eps0 <= 1; larger values are accepted for the cap arithmetic only.
    """

    tau: float
    xi: float
    eps0: float
    T: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "T", iteration_cap(self.xi, self.eps0))


@dataclass(frozen=True)
class TSelectResult:
    """Either a candidate whose score cleared the threshold, or a failure.

    ``eps_cost``/``delta_cost`` record the selection's privacy price
    (2*eps1 + eps0, 3*e^{2*eps1+eps0} * delta1 / xi) for the caller's
    composition ledger; they are bookkeeping, not a runtime proof.
    """

    candidate: Any
    score: float | None
    failed: bool
    draws: int
    eps_cost: float
    delta_cost: float


def t_select(oracle: ScoredOracle, config: TSelectConfig, rng: RandomSource) -> TSelectResult:
    """Draw until a score reaches ``config.tau``, a kill coin fires, or the cap hits.

    The returned candidate, when present, always has score >= tau, and the
    number of draws never exceeds config.T.
    """
    eps_cost = 2.0 * oracle.declared_eps + config.eps0
    delta_cost = 3.0 * math.exp(eps_cost) * oracle.declared_delta / config.xi
    draws = 0
    for j in range(1, config.T + 1):
        candidate, score = oracle.draw(rng)
        draws = j
        if score >= config.tau:
            return TSelectResult(candidate, score, False, draws, eps_cost, delta_cost)
        if sample_bernoulli(config.xi, rng):
            break
    return TSelectResult(None, None, True, draws, eps_cost, delta_cost)
