"""The normalizing sequence M_n = n!/(n+1)², kept in log space."""

from __future__ import annotations

from math import lgamma, log

import numpy as np


def log_majorant(n: int) -> float:
    """log M_n = log n! − 2 log(n+1)."""
    if n < 0:
        raise ValueError(f"majorant index must be nonnegative, got {n}")
    return lgamma(n + 1) - 2.0 * log(n + 1)


def log_majorant_ratio(n: int) -> float:
    """log(M_{n+1}/M_n) = 3 log(n+1) − 2 log(n+2)."""
    if n < 0:
        raise ValueError(f"majorant index must be nonnegative, got {n}")
    return 3.0 * log(n + 1) - 2.0 * log(n + 2)


class MajorantSequence:
    """Lazily extended table of log M_n."""

    def __init__(self):
        self._logs: list[float] = []

    def __getitem__(self, n: int) -> float:
        if n < 0:
            raise IndexError(n)
        while len(self._logs) <= n:
            self._logs.append(log_majorant(len(self._logs)))
        return self._logs[n]

    def value(self, n: int) -> float:
        return float(np.exp(self[n]))
