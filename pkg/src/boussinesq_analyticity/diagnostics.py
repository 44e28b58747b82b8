"""
Norms and budgets evaluated on spectral snapshots.

The H^k norm follows the derivative-sum definition

    ‖f‖²_{H^k} = Σ_{|α| ≤ k} ‖∂^α f‖²_{L²},

evaluated exactly from the Fourier coefficients with the weight
``W_k(k) = Σ_{|α|≤k} Π k_j^{2α_j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import log
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .majorant import log_majorant
from .spectral import (
    NOISE_FLOOR,
    TWO_PI,
    Grid,
    SpectralField,
    _check_same_grid,
    gradient,
    multi_indices,
    transform_inverse,
)

FieldLike = Union[SpectralField, Sequence[SpectralField]]

#: (N, log 𝓔_N) pairs; ``None`` marks an order below the noise floor.
Cascade = list[tuple[int, Optional[float]]]


def _as_list(f: FieldLike) -> list[SpectralField]:
    return [f] if isinstance(f, SpectralField) else list(f)


@lru_cache(maxsize=64)
def sobolev_weight(grid: Grid, k: int) -> np.ndarray:
    """Σ_{|α|≤k} Π_j k_j^{2α_j} on the derivative wavenumbers."""
    if k < 0:
        raise ValueError(f"Sobolev order must be nonnegative, got {k}")
    sq = [kk * kk for kk in grid.deriv_wavenumbers]
    if grid.dim == 1:
        return sum(sq[0] ** a for a in range(k + 1))
    # complete homogeneous sums h_m(x_1..x_d) accumulated over m <= k
    h = [np.ones(grid.shape)]
    for m in range(1, k + 1):
        h.append(_homogeneous(sq, m))
    return sum(h)


def _homogeneous(xs: list[np.ndarray], m: int) -> np.ndarray:
    out = np.zeros_like(xs[0])
    for alpha in multi_indices(m, len(xs)):
        term = np.ones_like(xs[0])
        for x, a in zip(xs, alpha):
            if a:
                term = term * x**a
        out += term
    return out


def _power(fields: list[SpectralField]) -> np.ndarray:
    _check_same_grid(*fields)
    return sum(np.abs(f.coeffs) ** 2 for f in fields)


def sobolev_norm(f: FieldLike, k: int) -> float:
    """H^k norm of a scalar field or of a vector field (components in quadrature)."""
    fields = _as_list(f)
    grid = fields[0].grid
    total = np.sum(_power(fields) * sobolev_weight(grid, k))
    return float(np.sqrt(TWO_PI**grid.dim * total))


def pair_norm(u: Sequence[SpectralField], theta: SpectralField, k: int) -> float:
    """‖(u, θ)‖_{H^k} = sqrt(‖u‖²_{H^k} + ‖θ‖²_{H^k})."""
    _check_same_grid(*u, theta)
    return float(np.hypot(sobolev_norm(u, k), sobolev_norm(theta, k)))


def grad_sup_norm(f: FieldLike) -> float:
    """Grid maximum of the Euclidean (Frobenius for vectors) norm of ∇f.

    The grid maximum is a lower bound on the true supremum; it converges
    spectrally fast under refinement.
    """
    sq = 0.0
    for comp in _as_list(f):
        for d in gradient(comp):
            sq = sq + transform_inverse(d) ** 2
    return float(np.sqrt(np.max(sq)))


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    _check_same_grid(f, g)
    return float(TWO_PI**f.grid.dim * np.sum((f.coeffs * np.conj(g.coeffs)).real))


def kinetic_energy(u: Sequence[SpectralField]) -> float:
    """½‖u‖²_{L²}."""
    return 0.5 * sobolev_norm(u, 0) ** 2


class DerivativeNorms:
    """log ‖∂^α F‖_{H^k} for a (possibly vector) field F, for any α.

    Powers of wavenumbers are taken relative to the largest |k_j| and the
    base spectrum relative to its maximum, so every factor is <= 1 and
    nothing overflows; magnitudes are carried as logarithms.  Modes whose
    amplitude does not exceed ``noise_floor`` are dropped: high-order
    derivatives would otherwise amplify FFT round-off in the outer shells.
    """

    def __init__(self, f: FieldLike, k: int, noise_floor: float = 0.0):
        fields = _as_list(f)
        grid = fields[0].grid
        power = _power(fields)
        base = np.where(power > noise_floor**2, power, 0.0) * sobolev_weight(grid, k)
        self.grid = grid
        self.k = k
        peak = float(np.max(base))
        self._empty = peak == 0.0
        self._log_peak = log(peak) if peak > 0 else -np.inf
        self._base = base / peak if peak > 0 else base
        kmax = float(max(np.max(np.abs(kk)) for kk in grid.deriv_wavenumbers))
        self._log_kmax = log(kmax)
        self._scaled_sq = [(kk / kmax) ** 2 for kk in grid.deriv_wavenumbers]
        self._pow_cache: dict[tuple[int, int], np.ndarray] = {}

    def _pow(self, axis: int, a: int) -> np.ndarray:
        key = (axis, a)
        arr = self._pow_cache.get(key)
        if arr is None:
            arr = self._pow_cache[key] = self._scaled_sq[axis] ** a
        return arr

    def log_norm(self, alpha: Sequence[int]) -> float:
        if self._empty:
            return -np.inf
        w = self._base
        for axis, a in enumerate(alpha):
            if a:
                w = w * self._pow(axis, a)
        s = float(np.sum(w))
        if s <= 0.0:
            return -np.inf
        order = sum(alpha)
        return 0.5 * (self.grid.dim * log(TWO_PI) + self._log_peak + log(s)) + order * self._log_kmax

    def log_sup(self, order: int) -> float:
        """max over |α| = order of log ‖∂^α F‖_{H^k}."""
        return max(self.log_norm(a) for a in multi_indices(order, self.grid.dim))


def derivative_cascade(
    u: Sequence[SpectralField],
    theta: SpectralField,
    k: int,
    n_max: int = 12,
    n_min: int = 2,
    noise_floor: float = NOISE_FLOOR,
) -> Cascade:
    """[(N, log 𝓔_N)] for N = n_min..n_max, 𝓔_N = sup_{|α|=N} ‖∂^α(u,θ)‖_{H^k} / M_N.

    Modes with amplitude at or below ``noise_floor`` are ignored, and orders
    whose derivative sup-norm does not exceed it are reported as ``None``.
    """
    if n_max > 12:
        raise ValueError("cascade orders beyond 12 are dominated by truncated modes")
    norms = DerivativeNorms(list(u) + [theta], k, noise_floor)
    floor = log(noise_floor) if noise_floor > 0 else -np.inf
    out: Cascade = []
    for n in range(n_min, n_max + 1):
        s = norms.log_sup(n)
        out.append((n, s - log_majorant(n) if s > floor else None))
    return out


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    hk_pair_norm: float
    grad_u_sup: float
    grad_theta_sup: float
    kinetic_energy: float
    theta_l2: float
    buoyancy_flux: float
    cascade: Cascade = field(default_factory=list)
    radius_estimates: dict = field(default_factory=dict)

    @property
    def integrand(self) -> float:
        """1 + ‖∇u‖_∞ + ‖∇θ‖_∞."""
        return 1.0 + self.grad_u_sup + self.grad_theta_sup


def diagnose(
    time: float,
    u: Sequence[SpectralField],
    theta: SpectralField,
    k: int,
    n_max: int = 12,
    noise_floor: float = NOISE_FLOOR,
) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        time=float(time),
        hk_pair_norm=pair_norm(u, theta, k),
        grad_u_sup=grad_sup_norm(u),
        grad_theta_sup=grad_sup_norm(theta),
        kinetic_energy=kinetic_energy(u),
        theta_l2=sobolev_norm(theta, 0),
        buoyancy_flux=l2_inner(theta, u[-1]),
        cascade=derivative_cascade(u, theta, k, n_max, noise_floor=noise_floor),
    )


def energy_budget(series: Sequence[DiagnosticsRecord], buoyancy_flux_series: Sequence[float]) -> float:
    """Normalized residual of d/dt ½‖u‖² = ⟨θ, u_d⟩ over a time series.

    ``max_t |E(t) − E(0) − ∫₀ᵗ ⟨θ, u_d⟩ ds| / max_t E(t)`` with the integral
    by the trapezoid rule on the record times.
    """
    if len(series) < 2:
        raise ValueError("energy budget needs at least two records")
    if len(buoyancy_flux_series) != len(series):
        raise ValueError("flux series length does not match the records")
    t = np.array([r.time for r in series])
    if np.any(np.diff(t) <= 0):
        raise ValueError("record times must be strictly increasing")
    e = np.array([r.kinetic_energy for r in series])
    work = cumulative_trapezoid(np.asarray(buoyancy_flux_series, dtype=float), t, initial=0.0)
    resid = np.max(np.abs(e - e[0] - work))
    if resid == 0.0:
        return 0.0
    return float(resid / max(np.max(e), np.finfo(float).tiny))
