"""Toy problems and synthetic batch optimizers for tests and demos.

Real applications of the continual-observation reduction need real batch
solvers; these fixtures isolate the reduction itself on data-monotone
problems whose optima are known exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .co import BatchAlgorithm, BatchGuarantee, MonotoneProblem
from .dist import RandomSource, sample_laplace

__all__ = [
    "CountDataset",
    "counting_stream",
    "threshold_count_problem",
    "skewed_tags",
    "cycling_tags",
    "parse_stream_records",
    "report_noisy_max_batch",
    "fixed_value_problem",
    "fixed_value_batch",
]


@dataclass(frozen=True)
class CountDataset:
    """Multiset snapshot of tagged elements: counts per tag plus total size."""

    counts: tuple[int, ...]
    size: int


def counting_stream(tags: Iterable[int], m: int) -> Iterator[CountDataset]:
    """Insertion-only stream of snapshots; element t carries tag tags[t-1]."""
    counts = [0] * m
    size = 0
    for tag in tags:
        if not 0 <= tag < m:
            raise ValueError(f"tag {tag} outside [0, {m})")
        counts[tag] += 1
        size += 1
        yield CountDataset(tuple(counts), size)


def threshold_count_problem(m: int, cap: float = math.inf) -> MonotoneProblem:
    """f(X, y) = min(count of elements tagged y, cap).

    Inserting one element moves one count by one, so sensitivity is 1; counts
    only grow along the stream, so the problem is data-monotone.
    """
    if m < 1:
        raise ValueError("m must be at least 1")

    def evaluate(dataset: CountDataset, y: int) -> float:
        return min(float(dataset.counts[y]), cap)

    def opt(dataset: CountDataset) -> float:
        return min(float(max(dataset.counts)), cap)

    return MonotoneProblem(candidates=tuple(range(m)), evaluate=evaluate, opt=opt)


def skewed_tags(n: int, m: int) -> list[int]:
    """Deterministic tag sequence with a clear leader: even slots go to tag 0,
    odd slots cycle through the rest."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return [0 if t % 2 == 0 else 1 + ((t // 2) % (m - 1)) for t in range(n)]


def cycling_tags(n: int, m: int) -> list[int]:
    return [t % m for t in range(n)]


def parse_stream_records(text: str, m: int) -> list[int]:
    """Parse newline-delimited "t,element-tag" records into a tag sequence.

    Records must be 1-based, contiguous and in order; blank lines and
    #-comments are skipped.
    """
    tags: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 't,element-tag', got {raw!r}")
        try:
            t, tag = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-integer field in {raw!r}") from exc
        if t != len(tags) + 1:
            raise ValueError(f"line {lineno}: expected t={len(tags) + 1}, got {t}")
        if not 0 <= tag < m:
            raise ValueError(f"line {lineno}: tag {tag} outside [0, {m})")
        tags.append(tag)
    return tags


def report_noisy_max_batch(problem: MonotoneProblem, beta_A: float = 0.2) -> BatchAlgorithm:
    """Report-noisy-max over the candidate set with Laplace(2/eps) scores.

    eps-DP for sensitivity-1 values, and with probability 1 - beta_A the
    winner is within (4/eps) * ln(m / beta_A) of the optimum (union bound on
    the m noise magnitudes), i.e. a high-probability guarantee with alpha = 1.
    """
    if not 0.0 < beta_A < 1.0:
        raise ValueError(f"beta_A must lie in (0, 1), got {beta_A}")
    m = len(problem.candidates)
    candidates = problem.candidates

    def values(dataset) -> np.ndarray:
        return np.array([problem.evaluate(dataset, y) for y in candidates], dtype=np.float64)

    def run(dataset, eps: float, delta: float, rng: RandomSource):
        noisy = values(dataset) + sample_laplace(2.0 / eps, rng, size=m)
        return candidates[int(np.argmax(noisy))]

    def run_batch(dataset, eps: float, delta: float, n: int, rng: RandomSource) -> np.ndarray:
        noise = sample_laplace(2.0 / eps, rng, size=n * m).reshape(n, m)
        winners = np.argmax(values(dataset)[None, :] + noise, axis=1)
        return winners  # candidates are 0..m-1

    guarantee = BatchGuarantee(
        kind="high-probability",
        alpha=1.0,
        error_fn=lambda eps, delta, b: (4.0 / eps) * math.log(m / (beta_A if b is None else b)),
        beta_A=beta_A,
    )
    return BatchAlgorithm(run=run, guarantee=guarantee, run_batch=run_batch)


def fixed_value_problem(value_fn: Callable[[object], float]) -> MonotoneProblem:
    """Single-candidate problem whose value is scripted by ``value_fn``.

    Used to pin the test mechanism's success probability exactly; monotone
    and sensitivity-1 only if the script is.
    """
    return MonotoneProblem(
        candidates=(0,),
        evaluate=lambda dataset, y: float(value_fn(dataset)),
        opt=lambda dataset: float(value_fn(dataset)),
    )


def fixed_value_batch(alpha: float = 1.0, beta_A: float = 0.0) -> BatchAlgorithm:
    """Batch stub always returning candidate 0 (value comes from the problem)."""
    guarantee = BatchGuarantee(
        kind="high-probability",
        alpha=alpha,
        error_fn=lambda eps, delta, b: 0.0,
        beta_A=max(beta_A, 1e-12),
    )
    return BatchAlgorithm(
        run=lambda dataset, eps, delta, rng: 0,
        guarantee=guarantee,
        run_batch=lambda dataset, eps, delta, n, rng: np.zeros(n, dtype=np.int64),
    )
