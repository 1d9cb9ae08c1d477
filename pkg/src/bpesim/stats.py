"""Mergeable running statistics for parallel trajectory aggregation.

Tallies hold (count, sum, sum of squares) per cell, so combining partial
results is commutative and associative up to float ordering; the experiment
driver always reduces chunks in a fixed order to keep outputs byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RunningTally:
    """Elementwise statistics over samples of a fixed-shape array."""

    n: int
    s: np.ndarray
    s2: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "RunningTally":
        return cls(0, np.zeros(shape, dtype=np.float64), np.zeros(shape, dtype=np.float64))

    def add(self, values: np.ndarray) -> None:
        v = np.asarray(values, dtype=np.float64)
        self.n += 1
        self.s += v
        self.s2 += v * v

    def merge(self, other: "RunningTally") -> None:
        self.n += other.n
        self.s += other.s
        self.s2 += other.s2

    def mean(self) -> np.ndarray:
        if self.n == 0:
            raise ValueError("no samples")
        return self.s / self.n

    def stderr(self) -> np.ndarray:
        """Standard error of the mean; zero when a single sample was seen."""
        if self.n == 0:
            raise ValueError("no samples")
        if self.n == 1:
            return np.zeros_like(self.s)
        var = (self.s2 - self.s * self.s / self.n) / (self.n - 1)
        return np.sqrt(np.maximum(var, 0.0) / self.n)
