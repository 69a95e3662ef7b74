from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n: int

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "ci95": [lo, hi]}


def mean_estimate(samples) -> Estimate:
    x = np.asarray(samples, dtype=float)
    n = int(x.size)
    if n == 0:
        raise ValueError("no samples")
    mean = float(x.mean())
    if n == 1:
        return Estimate(mean, 0.0, 1)
    return Estimate(mean, float(x.std(ddof=1) / math.sqrt(n)), n)


def binomial_estimate(successes: int, n: int) -> Estimate:
    if n <= 0:
        raise ValueError("no samples")
    p = successes / n
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)
