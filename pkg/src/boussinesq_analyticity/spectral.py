"""
Fourier substrate on the periodic box [0, 2π)^d.

Conventions
-----------
* Arrays are indexed ``[x1, x2, ...]`` (``indexing="ij"``) in physical space
  and in FFT order in spectral space.
* ``coeffs = fftn(f) / n**d``, so ``coeffs[k]`` is the analytic Fourier
  coefficient of ``f`` and ``f(x) = Σ_k coeffs[k] exp(i k·x)``.
* L² norms are continuum norms: ``‖f‖² = (2π)^d Σ_k |coeffs[k]|²``.
* The wavenumber lattice per axis is ``{-n/2+1, ..., n/2}``.  For
  differentiation the Nyquist wavenumber is treated as 0, which keeps odd
  derivatives of real fields real.  Nyquist modes lie outside the 2/3
  dealiasing band, so evolved fields never carry them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence

import numpy as np
import scipy.fft

MultiIndex = tuple[int, ...]

TWO_PI = 2.0 * np.pi
NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on [0, 2π)^dim."""

    n: int
    dim: int = 2
    length: float = TWO_PI

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def k_dealias(self) -> int:
        """Largest retained |k_i| under the 2/3 rule."""
        return self.n // 3

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer lattice per axis in FFT order, Nyquist stored as +n/2."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def k1d_deriv(self) -> np.ndarray:
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return k

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1d] * self.dim), indexing="ij"))

    @cached_property
    def deriv_wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1d_deriv] * self.dim), indexing="ij"))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.wavenumbers))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kd = self.k_dealias
        mask = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            mask &= np.abs(k) <= kd
        return mask

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))


def make_grid(n: int, dim: int = 2) -> Grid:
    """Build a grid; rejects odd or coarse resolutions (n < 8)."""
    if not isinstance(n, (int, np.integer)) or n < 8 or n % 2:
        raise ValueError(f"grid resolution must be an even integer >= 8, got {n!r}")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim!r}")
    return Grid(int(n), int(dim))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field on ``grid``.

    ``real`` marks coefficients of a real-valued physical field, i.e.
    ``coeffs[-k] == conj(coeffs[k])``.
    """

    coeffs: np.ndarray
    grid: Grid
    real: bool = field(default=True)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.coeffs + other.coeffs, self.grid, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.coeffs - other.coeffs, self.grid, self.real and other.real)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * scalar, self.grid, self.real and np.isrealobj(scalar))

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(np.zeros(grid.shape, dtype=complex), grid)

    def symmetry_defect(self) -> float:
        """max |c(-k) - conj(c(k))| relative to max |c|."""
        c = self.coeffs
        flipped = np.conj(np.roll(np.flip(c), 1, axis=tuple(range(c.ndim))))
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(c - flipped)) / scale)


def _check_same_grid(*fields: SpectralField) -> None:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("fields live on different grids")


def transform_forward(physical: np.ndarray, grid: Grid) -> SpectralField:
    physical = np.asarray(physical)
    if physical.shape != grid.shape:
        raise ValueError(f"array shape {physical.shape} does not match grid {grid.shape}")
    coeffs = scipy.fft.fftn(physical) / grid.n**grid.dim
    return SpectralField(coeffs, grid, real=np.isrealobj(physical))


def transform_inverse(field: SpectralField) -> np.ndarray:
    grid = field.grid
    out = scipy.fft.ifftn(field.coeffs * grid.n**grid.dim)
    return out.real if field.real else out


def multi_indices(order: int, dim: int) -> Iterator[MultiIndex]:
    """All α with |α| = order, in lexicographic order."""
    if dim == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in multi_indices(order - first, dim - 1):
            yield (first,) + rest


def multi_indices_upto(order: int, dim: int) -> Iterator[MultiIndex]:
    """All α with |α| <= order, lexicographic over the components."""
    for alpha in product(range(order + 1), repeat=dim):
        if sum(alpha) <= order:
            yield alpha


def derivative_multiplier(grid: Grid, alpha: Sequence[int]) -> np.ndarray:
    """(i k)^α as an array; integer powers keep products of multipliers exact."""
    if len(alpha) != grid.dim or any(a < 0 for a in alpha):
        raise ValueError(f"invalid multi-index {alpha!r} for dim {grid.dim}")
    real = np.ones(grid.shape)
    for k, a in zip(grid.deriv_wavenumbers, alpha):
        if a:
            real = real * k**a
    return real * (1j ** (sum(alpha) % 4))


def spectral_derivative(field: SpectralField, alpha: Sequence[int]) -> SpectralField:
    if not any(alpha):
        return SpectralField(field.coeffs.copy(), field.grid, field.real)
    return SpectralField(field.coeffs * derivative_multiplier(field.grid, alpha), field.grid, field.real)


def gradient(field: SpectralField) -> list[SpectralField]:
    dim = field.grid.dim
    return [spectral_derivative(field, tuple(int(i == j) for i in range(dim))) for j in range(dim)]


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(np.where(field.grid.dealias_mask, field.coeffs, 0.0), field.grid, field.real)


def velocity_from_vorticity(omega: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Divergence-free u with ∂₁u₂ − ∂₂u₁ = ω (2D Biot–Savart).

    ``u = (−∂₂ψ, ∂₁ψ)`` with ``Δψ = ω``, i.e. ``û = i (k₂, −k₁) ω̂ / |k|²``.
    """
    grid = omega.grid
    if grid.dim != 2:
        raise ValueError("Biot-Savart inversion is implemented for dim=2 only")
    c = omega.coeffs
    scale = max(1.0, float(np.max(np.abs(c))))
    if abs(c[0, 0]) > 1e-12 * scale:
        raise ValueError(f"vorticity has nonzero mean {c[0, 0]!r}")
    k1, k2 = grid.wavenumbers
    k2sq = k1 * k1 + k2 * k2
    k2sq[0, 0] = 1.0
    q = c / k2sq
    q[0, 0] = 0.0
    u1 = 1j * k2 * q
    u2 = -1j * k1 * q
    return SpectralField(u1, grid, omega.real), SpectralField(u2, grid, omega.real)


def curl(u1: SpectralField, u2: SpectralField) -> SpectralField:
    return spectral_derivative(u2, (1, 0)) - spectral_derivative(u1, (0, 1))


def shell_spectrum(*fields: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Shell-max amplitude envelope.

    Shell ``j >= 1`` holds the modes with ``j <= |k| < j + 1``; its amplitude
    is the largest ``|coeff|`` in the shell (the root-sum-square over
    components when several fields are given, e.g. the pair (u, θ)).
    Returns ``(shells, amplitudes)``.
    """
    _check_same_grid(*fields)
    grid = fields[0].grid
    power = sum(np.abs(f.coeffs) ** 2 for f in fields)
    amp = np.sqrt(power)
    shell = np.floor(grid.kmag + 1e-9).astype(int)
    out = np.zeros(shell.max() + 1)
    np.maximum.at(out, shell.ravel(), amp.ravel())
    shells = np.arange(1, out.size)
    return shells, out[1:]
