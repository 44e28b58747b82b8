"""
Radius-of-analyticity estimators.

An analytic field on the torus has Fourier coefficients bounded by
``C e^{-τ|k|}``; τ is read off either from the slope of the shell-max
spectrum or from the growth of the normalized derivative cascade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagnostics import Cascade
from .spectral import NOISE_FLOOR, Grid

HEAD_SHELLS = 2
MIN_SHELLS = 3
R2_THRESHOLD = 0.97
RATIO_SPREAD = 0.25
GUARD_DECADES = 30.0


@dataclass(frozen=True)
class RadiusEstimate:
    """Estimated radius; ``tau = math.inf`` when no decay is resolvable."""

    tau: float
    intercept: float
    r_squared: Optional[float]
    shells_used: int
    method: str
    degraded: bool = False
    per_order: tuple = field(default=())

    @property
    def finite(self) -> bool:
        return math.isfinite(self.tau)

    def to_dict(self) -> dict:
        return {
            "tau": tau_repr(self.tau),
            "intercept": None if math.isnan(self.intercept) else self.intercept,
            "r_squared": self.r_squared,
            "shells_used": self.shells_used,
            "method": self.method,
            "degraded": self.degraded,
        }


def tau_repr(tau: float):
    """Persisted form of a radius: infinite radii become the string ``"inf"``."""
    return "inf" if math.isinf(tau) else float(tau)


def fit_radius_shell(
    shells: Sequence[float], amplitudes: Sequence[float], noise_floor: float = NOISE_FLOOR
) -> RadiusEstimate:
    """Least-squares slope of log amplitude against shell radius.

    The first two shells are dropped and only amplitudes above
    ``noise_floor`` are fitted.  Fewer than three usable shells means the
    spectrum is compactly supported at this precision (``tau = inf``).
    A nonnegative slope raises ``ValueError``.
    """
    shells = np.asarray(shells, dtype=float)
    amps = np.asarray(amplitudes, dtype=float)
    if shells.shape != amps.shape:
        raise ValueError("shell and amplitude arrays differ in length")
    if np.any(np.diff(shells) <= 0):
        raise ValueError("spectrum must be sorted by shell")
    sel = np.zeros(shells.size, dtype=bool)
    sel[HEAD_SHELLS:] = True
    sel &= amps > noise_floor
    used = int(sel.sum())
    if used < MIN_SHELLS:
        return RadiusEstimate(math.inf, math.nan, None, used, "shell_fit")
    x = shells[sel]
    y = np.log(amps[sel])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0.0:
        raise ValueError(f"spectrum is not decaying (slope {slope:.3g}); under-resolved or non-analytic")
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    return RadiusEstimate(float(-slope), float(intercept), r2, used, "shell_fit", r2 < R2_THRESHOLD)


def _consecutive_run(cascade: Cascade) -> list[tuple[int, float]]:
    """Highest-order block of consecutive orders with values present."""
    runs: list[list[tuple[int, float]]] = [[]]
    prev = None
    for n, v in sorted(cascade, key=lambda e: e[0]):
        if v is None or (prev is not None and n != prev + 1):
            runs.append([])
        if v is not None:
            runs[-1].append((n, v))
        prev = n
    usable = [r for r in runs if len(r) >= 2]
    return usable[-1] if usable else []


def radius_from_cascade(cascade: Cascade) -> RadiusEstimate:
    """Radius from successive ratios of the normalized derivative cascade.

    The raw ratio ``τ_N = 𝓔_{N−1}/𝓔_N`` approaches τ only like ``1 − c/N``
    because the derivative norms of an analytic field carry a polynomial
    prefactor that ``M_N`` does not cancel.  The inverse ratios are
    therefore extrapolated linearly in ``1/N`` (Domb–Sykes):
    ``1/τ̂_N = N/τ_N − (N−1)/τ_{N−1}``.  A nonpositive extrapolated inverse
    radius means the cascade decays faster than any geometric rate (an
    entire function at this resolution) and gives ``tau = inf``.

    The reported radius is the one at the largest usable order; the
    estimate is flagged degraded when the last three orders spread by more
    than 25%.  ``per_order`` holds ``(N, raw τ_N, extrapolated τ̂_N)``.
    """
    run = _consecutive_run(cascade)
    if len(run) < 2:
        raise ValueError("radius_from_cascade needs at least two consecutive cascade orders")
    orders = [n for n, _ in run]
    logs = np.array([v for _, v in run])
    inv = np.exp(np.diff(logs))  # 1/τ_N for orders[1:]
    raw = 1.0 / inv
    per_order = []
    extrap = []
    for i in range(1, len(orders)):
        n = orders[i]
        t_raw = float(raw[i - 1])
        if i >= 2:
            d = n * inv[i - 1] - (n - 1) * inv[i - 2]
            t_hat = float(1.0 / d) if d > 0 else math.inf
            extrap.append(t_hat)
        else:
            t_hat = math.nan
        per_order.append((n, t_raw, t_hat))
    if not extrap:
        return RadiusEstimate(float(raw[-1]), math.nan, None, len(run), "derivative_ratio", True, tuple(per_order))
    tail = extrap[-3:]
    tau = tail[-1]
    if all(math.isinf(t) for t in tail):
        degraded = False
    elif any(math.isinf(t) for t in tail):
        degraded = True
    else:
        degraded = (max(tail) - min(tail)) / min(tail) > RATIO_SPREAD
    return RadiusEstimate(tau, math.nan, None, len(run), "derivative_ratio", degraded, tuple(per_order))


def resolution_guard(estimate: RadiusEstimate, grid: Grid, decades: float = GUARD_DECADES) -> bool:
    """True when τ·k_dealias >= ``decades`` (always true for infinite τ)."""
    if not estimate.finite:
        return True
    return estimate.tau * grid.k_dealias >= decades
