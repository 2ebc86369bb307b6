"""Purification of approximate-DP binary oracles.

Routing each +/-1 output through a binary symmetric channel with a small
crossover probability turns an (eps, delta)-DP mechanism into a pure eps-DP
one: lifting both output probabilities away from zero bounds their worst
ratio. The success probability moves by at most delta/eps, so threshold
tests transfer with a correspondingly tiny shift.
"""

from __future__ import annotations

import math

import numpy as np

from .dist import RandomSource, sample_bernoulli
from .gtm import BinaryOracle

__all__ = ["SmoothedOracle", "purify", "purify_default", "crossover_probability"]


class SmoothedOracle:
    """An inner oracle whose output is flipped independently with probability phi.

    The smoothed success probability is the affine map p + phi*(1 - 2p);
    for phi <= 1/2 the map is order preserving. Each evaluation costs exactly
    one inner draw plus one coin flip, taken from split children of the
    per-draw source so the inner oracle's own consumption is undisturbed.
    """

    __slots__ = ("inner", "phi", "declared_eps", "declared_delta", "exact_p")

    def __init__(self, inner: BinaryOracle, phi: float):
        phi = float(phi)
        if not 0.0 <= phi <= 0.5:
            raise ValueError(
                f"phi must lie in [0, 1/2] (order preservation fails beyond 1/2), got {phi}"
            )
        self.inner = inner
        self.phi = phi
        self.declared_eps = inner.declared_eps
        self.declared_delta = 0.0
        p = getattr(inner, "exact_p", None)
        self.exact_p = None if p is None else smoothed_probability(p, phi)

    def draw(self, rng: RandomSource) -> int:
        a = self.inner.draw(rng.split(0))
        if sample_bernoulli(self.phi, rng.split(1)):
            return -a
        return a

    def draw_batch(self, n: int, rng: RandomSource):
        inner_batch = getattr(self.inner, "draw_batch", None)
        if inner_batch is None:
            return None
        ys = inner_batch(n, rng.split(0))
        if ys is None:
            return None
        flips = rng.split(1).generator.random(n) < self.phi
        ys = np.asarray(ys)
        return np.where(flips, -ys, ys)


def smoothed_probability(p: float, phi: float) -> float:
    """Success probability after the channel: p + phi*(1-2p)."""
    return p + phi * (1.0 - 2.0 * p)


def crossover_probability(eps1: float, delta1: float, c: float = 1.0) -> float:
    """Smallest crossover making the smoothed oracle (c * eps1)-DP."""
    if not eps1 > 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    if not 0.0 <= delta1 < 1.0:
        raise ValueError(f"delta1 must lie in [0, 1), got {delta1}")
    if c < 1.0:
        raise ValueError(f"c must be at least 1, got {c}")
    return delta1 / (math.expm1(c * eps1) + 2.0 * delta1)


def purify(inner: BinaryOracle, phi: float) -> SmoothedOracle:
    """Wrap ``inner`` in the flip channel with an explicit crossover probability."""
    return SmoothedOracle(inner, phi)


def purify_default(inner: BinaryOracle, eps1: float, delta1: float) -> SmoothedOracle:
    """Purify with phi = delta1 / (e^eps1 - 1 + 2*delta1).

    The result is pure eps1-DP and its success probability is within
    delta1/eps1 of the inner oracle's.
    """
    return SmoothedOracle(inner, crossover_probability(eps1, delta1))
