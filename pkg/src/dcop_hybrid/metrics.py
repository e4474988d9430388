"""Run metrics shared by the engine and the experiment harness."""
from __future__ import annotations

import math
from typing import Sequence


class UndefinedCorrelationError(ValueError):
    pass


def detect_convergence(trace: Sequence) -> int:
    """First round whose cost lies within 1% of the trace minimum.

    A zero minimum requires an exact zero.
    """
    if len(trace) == 0:
        raise ValueError("trace must not be empty")
    threshold = 1.01 * min(trace)
    for r, c in enumerate(trace):
        if c <= threshold:
            return r
    raise AssertionError("unreachable: the minimum always satisfies the threshold")


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two observations")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant sequence")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
