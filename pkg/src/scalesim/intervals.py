"""Open intervals of the extended real line."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi); either endpoint may be infinite."""

    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval: lo={self.lo!r} must be < hi={self.hi!r}")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo < x < self.hi

    def midpoint(self) -> float:
        if not self.is_finite:
            raise ValueError("midpoint of an unbounded interval")
        return 0.5 * (self.lo + self.hi)

    def default_anchor(self) -> float:
        # 0 when available, midpoint for bounded intervals, one unit inside
        # a half-line otherwise; the anchor only fixes the additive constant
        # of a scale function.
        if self.contains(0.0):
            return 0.0
        if self.is_finite:
            return self.midpoint()
        if math.isfinite(self.lo):
            return self.lo + 1.0
        return self.hi - 1.0


REAL_LINE = Interval(-math.inf, math.inf)
