"""Closed-form rank-error estimates and small statistics helpers.

The relaxed delete picks the best of d randomly chosen queues out of c*p.
Treating "the global minimum sits among the candidates" as an independent
event per deletion with probability s = d/(c*p) gives a geometric rank-error
law; for d = 2 a finer balls-into-bins argument yields an exact long-run
mean. Both are exposed here so benchmarks and plots can overlay theory on
measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankErrorModel:
    """Analytic model for the rank error of relaxed deletions."""

    queue_factor: int
    threads: int
    candidates: int

    def __post_init__(self):
        if self.queue_factor < 1 or self.threads < 1 or self.candidates < 1:
            raise ValueError("model parameters must be >= 1")
        if self.candidates > self.queue_factor * self.threads:
            raise ValueError("more candidates than queues")

    @classmethod
    def from_queue_count(cls, queues: int, candidates: int) -> "RankErrorModel":
        return cls(queue_factor=queues, threads=1, candidates=candidates)

    @property
    def queues(self) -> int:
        return self.queue_factor * self.threads

    @property
    def hit_probability(self) -> float:
        """Chance that one deletion inspects the queue holding the minimum."""
        return self.candidates / self.queues

    def tail_probability(self, i: int) -> float:
        """P(rank error >= i) under the independent-miss approximation."""
        return (1.0 - self.hit_probability) ** i

    def expected_rank_error(self) -> float:
        """Mean of the geometric approximation, 1/s - 1."""
        return 1.0 / self.hit_probability - 1.0

    def long_run_mean_two_choice(self) -> float:
        """Exact long-run mean rank error for two-choice deletion.

        Valid only for candidates = 2; accounts for the candidate queues'
        occupancy drifting away from uniform over time.
        """
        if self.candidates != 2:
            raise ValueError("closed form only known for two candidates")
        q = self.queues
        return (5.0 / 6.0) * q - 1.0 + 1.0 / (6.0 * q)


def ks_distance(xs, ys) -> float:
    """Two-sample Kolmogorov-Smirnov distance for nonnegative int samples."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("empty sample")
    hi = int(max(xs.max(), ys.max())) + 1
    fx = np.cumsum(np.bincount(xs, minlength=hi)) / xs.size
    fy = np.cumsum(np.bincount(ys, minlength=hi)) / ys.size
    return float(np.abs(fx - fy).max())


def empirical_tail(values, threshold: int) -> float:
    """Fraction of samples >= threshold."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty sample")
    return float((values >= threshold).mean())
