"""Nonnegative reals stored as natural logs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

NEG_INF = float("-inf")


@dataclass(frozen=True, order=True)
class LogReal:
    ln_value: float

    def __post_init__(self):
        if math.isnan(self.ln_value) or self.ln_value == float("inf"):
            raise ValueError(f"invalid log value {self.ln_value}")

    @classmethod
    def from_float(cls, x: float) -> "LogReal":
        if x < 0:
            raise ValueError("LogReal holds nonnegative values only")
        return cls(math.log(x) if x > 0 else NEG_INF)

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(NEG_INF)

    @classmethod
    def one(cls) -> "LogReal":
        return cls(0.0)

    def __mul__(self, other: "LogReal") -> "LogReal":
        return LogReal(self.ln_value + other.ln_value)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.ln_value == NEG_INF:
            raise ZeroDivisionError("LogReal division by zero")
        return LogReal(self.ln_value - other.ln_value)

    def __pow__(self, p: float) -> "LogReal":
        if self.ln_value == NEG_INF:
            return LogReal(0.0 if p == 0 else NEG_INF)
        return LogReal(self.ln_value * p)

    def __add__(self, other: "LogReal") -> "LogReal":
        return log_sum([self, other])

    def __float__(self) -> float:
        return math.exp(self.ln_value)

    @property
    def log10(self) -> float:
        return self.ln_value / math.log(10)


def log_sum(terms: Iterable[LogReal]) -> LogReal:
    """Sum by factoring out the largest term."""
    lns = [t.ln_value for t in terms]
    if not lns:
        return LogReal.zero()
    top = max(lns)
    if top == NEG_INF:
        return LogReal.zero()
    return LogReal(top + math.log(math.fsum(math.exp(v - top) for v in lns)))
