"""
Executable forms of the analyticity estimates.

Everything involving factorials, binomials or powers of the order is done
with logarithms.  Multi-indices are enumerated lexicographically so that
reductions are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from math import lgamma, log
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .analyticity import fit_radius_shell, resolution_guard
from .diagnostics import Cascade, DerivativeNorms, pair_norm
from .majorant import MajorantSequence, log_majorant, log_majorant_ratio
from .spectral import NOISE_FLOOR, SpectralField, multi_indices_upto, shell_spectrum

__all__ = [
    "BoundParams",
    "CalibrationError",
    "CombinatorialReport",
    "InductiveReport",
    "IntegrandSeries",
    "MajorantSequence",
    "UnresolvedDataError",
    "calibrate_constants",
    "check_inductive_bound",
    "fit_gronwall_constant",
    "initial_constants",
    "initial_constant_terms",
    "log_lower_bound_tau",
    "lower_bound_tau",
    "majorant",
    "sobolev_growth_bound",
    "verify_combinatorial",
]

CALIBRATION_GRID = tuple(2.0**p for p in range(-4, 7))


def majorant(n: int) -> float:
    """log M_n, M_n = n!/(n+1)²."""
    return log_majorant(n)


majorant_ratio = log_majorant_ratio


# --------------------------------------------------------------------------
# combinatorial inequality
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CombinatorialReport:
    """Empirical constant of Σ_{β<α} C(α,β) M_{|α−β|} M_{|β|+1} ≤ C |α| M_{|α|}."""

    dim: int
    order_max: int
    constant: float
    per_order: tuple[float, ...]

    @property
    def growth(self) -> float:
        """Relative increase of the running max from order_max−1 to order_max."""
        if len(self.per_order) < 2:
            return math.inf
        prev = max(self.per_order[:-1])
        return (self.constant - prev) / self.constant

    @property
    def saturated(self) -> bool:
        return math.isfinite(self.constant) and self.growth < 0.01


def _log_binom_multi(alpha: Sequence[int], beta: Sequence[int]) -> float:
    return sum(lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1) for a, b in zip(alpha, beta))


def combinatorial_ratio(alpha: Sequence[int]) -> float:
    """LHS/(|α| M_{|α|}) for one multi-index α with |α| >= 1."""
    n = sum(alpha)
    if n < 1:
        raise ValueError("need |alpha| >= 1")
    terms = []
    for beta in product(*(range(a + 1) for a in alpha)):
        if tuple(beta) == tuple(alpha):
            continue
        b = sum(beta)
        terms.append(_log_binom_multi(alpha, beta) + log_majorant(n - b) + log_majorant(b + 1))
    return float(np.exp(logsumexp(terms) - log(n) - log_majorant(n)))


def verify_combinatorial(order_max: int, d: int) -> CombinatorialReport:
    """Brute-force the empirical constant over all 1 <= |α| <= order_max in dimension d."""
    if not 1 <= order_max <= 14:
        raise ValueError("order_max must lie in 1..14")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    best = [0.0] * (order_max + 1)
    for alpha in multi_indices_upto(order_max, d):
        n = sum(alpha)
        if n == 0:
            continue
        best[n] = max(best[n], combinatorial_ratio(alpha))
    per_order = tuple(best[1:])
    return CombinatorialReport(d, order_max, max(per_order), per_order)


# --------------------------------------------------------------------------
# constants of the initial data
# --------------------------------------------------------------------------


class UnresolvedDataError(ValueError):
    """Initial data fails the resolution guard; derived constants would be spurious."""


@dataclass(frozen=True)
class InitialTerms:
    A: float
    sobolev_term: float
    log_terms: tuple[float, ...]  # per order |α|: log(sup ‖∂^α‖_{H^k} / (A^{|α|−1} M_{|α|}))

    @property
    def sup_term(self) -> float:
        return float(np.exp(max(self.log_terms)))

    @property
    def B(self) -> float:
        return max(self.sobolev_term, self.sup_term)

    @property
    def argmax_order(self) -> int:
        return int(np.argmax(self.log_terms))

    @property
    def certified(self) -> bool:
        """The per-order term peaks strictly before the last probed order."""
        if all(math.isinf(v) for v in self.log_terms):
            return True
        return self.argmax_order < len(self.log_terms) - 1


def initial_constant_terms(
    u: Sequence[SpectralField],
    theta: SpectralField,
    k: int,
    A: float = 1.0,
    n_probe: int = 12,
    check_resolution: bool = True,
    noise_floor: float = NOISE_FLOOR,
) -> InitialTerms:
    if A < 1.0:
        raise ValueError(f"A must be >= 1, got {A}")
    if not 0 <= n_probe <= 12:
        raise ValueError("n_probe must lie in 0..12")
    fields = list(u) + [theta]
    if check_resolution:
        shells, amps = shell_spectrum(*fields)
        try:
            est = fit_radius_shell(shells, amps, noise_floor)
        except ValueError as exc:
            raise UnresolvedDataError(str(exc)) from exc
        if not resolution_guard(est, theta.grid):
            raise UnresolvedDataError(
                f"initial data radius {est.tau:.3g} is not resolved on n={theta.grid.n}"
            )
    norms = DerivativeNorms(fields, k, noise_floor)
    logA = log(A)
    terms = tuple(norms.log_sup(n) - (n - 1) * logA - log_majorant(n) for n in range(n_probe + 1))
    sob = 2.25 * pair_norm(u, theta, 2 * k + 1)
    return InitialTerms(float(A), sob, terms)


def initial_constants(
    u: Sequence[SpectralField],
    theta: SpectralField,
    k: int,
    A: float = 1.0,
    n_probe: int = 12,
    check_resolution: bool = True,
) -> float:
    """Smallest B with ‖∂^α(u₀,θ₀)‖_{H^k} ≤ B A^{|α|−1} M_{|α|} for |α| ≤ n_probe
    and B ≥ (9/4)‖(u₀,θ₀)‖_{H^{2k+1}}."""
    return initial_constant_terms(u, theta, k, A, n_probe, check_resolution).B


def escalate_A(
    u: Sequence[SpectralField],
    theta: SpectralField,
    k: int,
    A: float = 1.0,
    n_probe: int = 12,
    max_doublings: int = 20,
) -> InitialTerms:
    """Double A until the derivative terms peak inside the probed range."""
    terms = initial_constant_terms(u, theta, k, A, n_probe)
    for _ in range(max_doublings):
        if terms.certified:
            return terms
        A *= 2.0
        terms = initial_constant_terms(u, theta, k, A, n_probe, check_resolution=False)
    if not terms.certified:
        raise UnresolvedDataError(f"no A <= {A:g} certifies the initial derivative bound")
    return terms


# --------------------------------------------------------------------------
# time-integrated bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrandSeries:
    """g(s) = 1 + ‖∇u(s)‖_∞ + ‖∇θ(s)‖_∞ sampled at increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be equal-length 1D series")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 1.0):
            raise ValueError("integrand values must be >= 1")

    @classmethod
    def from_records(cls, records) -> "IntegrandSeries":
        return cls(np.array([r.time for r in records]), np.array([r.integrand for r in records]))

    def cumulative(self) -> np.ndarray:
        """Trapezoid ∫_{t₀}^{t_i} g at every sample time."""
        inc = 0.5 * np.diff(self.times) * (self.values[1:] + self.values[:-1])
        return np.concatenate([[0.0], np.cumsum(inc)])

    def integral(self, t: float) -> float:
        """Trapezoid ∫_{t₀}^{t} g with g linear between samples."""
        ts, vs = self.times, self.values
        if not ts[0] - 1e-12 <= t <= ts[-1] + 1e-12:
            raise ValueError(f"t={t} outside the series range [{ts[0]}, {ts[-1]}]")
        t = min(max(t, ts[0]), ts[-1])
        cum = self.cumulative()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        if i >= ts.size - 1:
            return float(cum[-1])
        gt = vs[i] + (vs[i + 1] - vs[i]) * (t - ts[i]) / (ts[i + 1] - ts[i])
        return float(cum[i] + 0.5 * (t - ts[i]) * (vs[i] + gt))


def sobolev_growth_bound(t: float, initial_norm: float, C0: float, integrand: IntegrandSeries) -> float:
    """initial_norm · exp(C₀ ∫₀ᵗ g)."""
    return float(initial_norm * np.exp(C0 * integrand.integral(t)))


@dataclass(frozen=True)
class BoundParams:
    A: float
    B: float
    C0: float
    C1: float
    k: int
    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if not self.k > self.d / 2 + 1:
            raise ValueError(f"need k > d/2 + 1, got k={self.k}, d={self.d}")
        if self.A < 1.0:
            raise ValueError(f"A must be >= 1, got {self.A}")
        if not self.B > 0.0:
            raise ValueError("B must be positive (B = 0 is degenerate)")
        if not (self.C0 > 0.0 and self.C1 > 0.0):
            raise ValueError("C0 and C1 must be positive")


def log_lower_bound_tau(t: float, params: BoundParams, integrand: IntegrandSeries) -> float:
    """log of the radius lower bound; finite even where the bound underflows."""
    dt = t - integrand.times[0]
    return -params.C0 * integrand.integral(t) - log(params.A) - math.log1p(params.C1 * params.B * dt)


def lower_bound_tau(t: float, params: BoundParams, integrand: IntegrandSeries) -> float:
    """1/(A(1 + C₁Bt)) · exp(−C₀ ∫₀ᵗ g)."""
    return float(np.exp(log_lower_bound_tau(t, params, integrand)))


# --------------------------------------------------------------------------
# inductive bound on the derivative cascade
# --------------------------------------------------------------------------


@dataclass
class InductiveReport:
    margins: dict = field(default_factory=dict)  # (t, N) -> log RHS − log 𝓔_N
    skipped: list = field(default_factory=list)  # (t, N) with no cascade value

    @property
    def min_margin(self) -> float:
        return min(self.margins.values()) if self.margins else math.inf

    def min_margin_at(self, t: float) -> float:
        vals = [m for (tt, _), m in self.margins.items() if tt == t]
        return min(vals) if vals else math.inf

    def as_rows(self) -> list[tuple[float, int, float]]:
        return sorted((t, n, m) for (t, n), m in self.margins.items())


def inductive_log_rhs(n: int, t: float, params: BoundParams, integral: float) -> float:
    """log of 2 B A^{N−1} (1 + C₁Bt)^{N−2} exp(C₀ (N−1) ∫₀ᵗ g)."""
    return (
        log(2.0)
        + log(params.B)
        + (n - 1) * log(params.A)
        + (n - 2) * math.log1p(params.C1 * params.B * t)
        + params.C0 * (n - 1) * integral
    )


def check_inductive_bound(
    cascade_series: Sequence[tuple[float, Cascade]],
    params: BoundParams,
    integrand: IntegrandSeries,
    n_max: Optional[int] = None,
) -> InductiveReport:
    """Margins log RHS − log 𝓔_N(t) for every snapshot and every order N >= 2."""
    report = InductiveReport()
    t0 = integrand.times[0]
    for t, cascade in cascade_series:
        integral = integrand.integral(t)
        for n, value in cascade:
            if n < 2 or (n_max is not None and n > n_max):
                continue
            if value is None:
                report.skipped.append((t, n))
                continue
            report.margins[(t, n)] = inductive_log_rhs(n, t - t0, params, integral) - value
    return report


# --------------------------------------------------------------------------
# calibration
# --------------------------------------------------------------------------


class CalibrationError(RuntimeError):
    pass


def _lemma_holds(C0: float, log_growth: np.ndarray, integrals: np.ndarray) -> bool:
    return bool(np.all(log_growth <= C0 * integrals))


def fit_gronwall_constant(hk_norms: Sequence[float], integrand: IntegrandSeries, tol: float = 1e-10) -> float:
    """Smallest C₀ ≥ 0 with ‖(u,θ)(t)‖_{H^k} ≤ ‖(u₀,θ₀)‖_{H^k} exp(C₀∫₀ᵗg) at all samples.

    Log-growth below ``tol`` counts as round-off, so steady states fit 0.
    """
    norms = np.asarray(hk_norms, dtype=float)
    if norms.size != integrand.times.size:
        raise ValueError("norm series and integrand series differ in length")
    if norms[0] == 0.0:
        return 0.0
    growth = np.log(norms[1:] / norms[0])
    integrals = integrand.cumulative()[1:]
    growth = np.where(growth <= tol, 0.0, growth)
    if growth.size == 0:
        return 0.0
    return float(max(0.0, np.max(growth / integrals)))


@dataclass(frozen=True)
class Calibration:
    C0: float
    C1: float
    C0_lemma: float
    lemma_fit: float
    min_margin: float


def calibrate_constants(
    hk_norms: Sequence[float],
    cascade_series: Sequence[tuple[float, Cascade]],
    integrand: IntegrandSeries,
    A: float,
    B: float,
    k: int,
    d: int = 2,
    grid_values: Sequence[float] = CALIBRATION_GRID,
    n_max: Optional[int] = None,
) -> Calibration:
    """Smallest grid C₀ satisfying the Sobolev growth bound at every sample,
    then the smallest grid C₁ giving a nonnegative inductive margin.

    If no C₁ works with that C₀, C₀ is raised along the grid (a larger C₀
    only loosens both bounds).  Raises ``CalibrationError`` when nothing on
    the grid suffices.
    """
    norms = np.asarray(hk_norms, dtype=float)
    if norms.size != integrand.times.size:
        raise ValueError("norm series and integrand series differ in length")
    if norms[0] <= 0.0:
        raise CalibrationError("initial H^k norm is zero; the growth bound is degenerate")
    growth = np.log(norms / norms[0])
    integrals = integrand.cumulative()
    lemma_c0 = next((c for c in grid_values if _lemma_holds(c, growth, integrals)), None)
    if lemma_c0 is None:
        raise CalibrationError(
            f"Sobolev growth bound fails for every C0 on the grid (fitted {fit_gronwall_constant(norms, integrand):.3g})"
        )
    for c0 in (c for c in grid_values if c >= lemma_c0):
        for c1 in grid_values:
            params = BoundParams(A, B, c0, c1, k, d)
            report = check_inductive_bound(cascade_series, params, integrand, n_max)
            if report.min_margin >= 0.0:
                return Calibration(c0, c1, lemma_c0, fit_gronwall_constant(norms, integrand), report.min_margin)
    raise CalibrationError("inductive bound fails for every (C0, C1) on the grid")
