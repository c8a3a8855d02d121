"""Binomial statistics for logical failure counts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Tuple


def wilson_interval(failures: int, shots: int, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= failures <= shots:
        raise ValueError(f"failures={failures} outside [0, {shots}]")
    phat = failures / shots
    z2 = z * z
    denom = 1 + z2 / shots
    centre = (phat + z2 / (2 * shots)) / denom
    half = z * math.sqrt(phat * (1 - phat) / shots + z2 / (4 * shots * shots)) / denom
    low = 0.0 if failures == 0 else max(0.0, centre - half)
    high = 1.0 if failures == shots else min(1.0, centre + half)
    return low, high


@dataclass(frozen=True)
class ShotStats:
    shots: int
    failures: int

    def __post_init__(self):
        if self.shots < 0 or not 0 <= self.failures <= self.shots:
            raise ValueError(f"invalid counts failures={self.failures} shots={self.shots}")

    @property
    def p_logical(self) -> float:
        return self.failures / self.shots if self.shots else float("nan")

    @property
    def interval(self) -> Tuple[float, float]:
        return wilson_interval(self.failures, self.shots)

    @property
    def sigma(self) -> float:
        """Binomial standard error, floored at one count to stay usable as a fit weight."""
        p = max(self.failures, 1) / self.shots
        return math.sqrt(p * (1 - p) / self.shots)

    def relative_width(self) -> float:
        if self.failures == 0:
            return math.inf
        lo, hi = self.interval
        return (hi - lo) / self.p_logical

    def __add__(self, other: "ShotStats") -> "ShotStats":
        return ShotStats(self.shots + other.shots, self.failures + other.failures)

    def to_dict(self) -> dict:
        lo, hi = self.interval if self.shots else (float("nan"), float("nan"))
        return dict(asdict(self), p_logical=self.p_logical, ci_low=lo, ci_high=hi)
