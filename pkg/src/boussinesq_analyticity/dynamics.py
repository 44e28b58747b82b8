"""
2D inviscid Boussinesq system in vorticity–density form.

    ∂t ω + u·∇ω = ∂₁θ,    ∂t θ + u·∇θ = 0,    u = Biot–Savart(ω)

Pressure never appears: taking the curl of the momentum equation removes it,
which is the same as applying the Leray projection.  Nonlinear products are
formed in physical space and the tendencies are truncated with the 2/3 rule.
Time stepping is classical RK4 with a CFL-limited step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.fft

from .spectral import Grid, SpectralField, velocity_from_vorticity

log = logging.getLogger(__name__)

MEAN_TOL = 1e-12


class SimulationError(RuntimeError):
    """The solver stopped; ``last_state`` is the last valid state."""

    category = "simulation_error"

    def __init__(self, message: str, last_state: Optional["FlowState"] = None):
        super().__init__(message)
        self.last_state = last_state

    @property
    def time(self) -> float:
        return self.last_state.time if self.last_state is not None else float("nan")


class NonFiniteError(SimulationError):
    category = "nan"


class CFLCollapseError(SimulationError):
    category = "cfl_collapse"


@dataclass(frozen=True)
class FlowState:
    omega: SpectralField
    theta: SpectralField
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def velocity(self) -> tuple[SpectralField, SpectralField]:
        return velocity_from_vorticity(self.omega)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.omega.coeffs)) and np.all(np.isfinite(self.theta.coeffs)))


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.5
    dt_max: float = 0.01
    dt_min: float = 1e-8
    t_end: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not 0.0 < self.dt_min <= self.dt_max:
            raise ValueError(f"need 0 < dt_min <= dt_max, got {self.dt_min}, {self.dt_max}")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")


def initial_state(omega: SpectralField, theta: SpectralField, time: float = 0.0) -> FlowState:
    """Validated initial state: zero-mean real fields on a common 2D grid."""
    if omega.grid != theta.grid or omega.grid.dim != 2:
        raise ValueError("omega and theta must share one 2D grid")
    if not (omega.real and theta.real):
        raise ValueError("omega and theta must be real-valued fields")
    for name, f in (("omega", omega), ("theta", theta)):
        if abs(f.coeffs[0, 0]) > MEAN_TOL:
            raise ValueError(f"{name} must have zero mean, got {f.coeffs[0, 0]!r}")
    state = FlowState(omega, theta, time)
    if not state.is_finite():
        raise NonFiniteError("initial state contains NaN/Inf")
    return state


class _Kernel:
    """Precomputed multipliers for the pseudo-spectral right-hand side of one grid."""

    _cache: dict = {}

    def __init__(self, grid: Grid):
        k1, k2 = grid.wavenumbers
        d1, d2 = grid.deriv_wavenumbers
        ksq = k1 * k1 + k2 * k2
        ksq[0, 0] = 1.0
        inv = 1.0 / ksq
        inv[0, 0] = 0.0
        self.grid = grid
        self.norm = float(grid.n**2)
        self.bs1 = 1j * k2 * inv
        self.bs2 = -1j * k1 * inv
        self.ik1 = 1j * d1
        self.ik2 = 1j * d2
        self.mask = grid.dealias_mask

    @classmethod
    def for_grid(cls, grid: Grid) -> "_Kernel":
        kern = cls._cache.get(grid)
        if kern is None:
            kern = cls._cache[grid] = cls(grid)
        return kern

    def tendencies(self, w: np.ndarray, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        stack = np.stack(
            [self.bs1 * w, self.bs2 * w, self.ik1 * w, self.ik2 * w, self.ik1 * th, self.ik2 * th]
        )
        u1, u2, wx, wy, tx, ty = scipy.fft.ifft2(stack * self.norm, axes=(1, 2)).real
        adv = scipy.fft.fft2(np.stack([u1 * wx + u2 * wy, u1 * tx + u2 * ty]), axes=(1, 2)) / self.norm
        dw = np.where(self.mask, self.ik1 * th - adv[0], 0.0)
        dth = np.where(self.mask, -adv[1], 0.0)
        dw[0, 0] = 0.0
        dth[0, 0] = 0.0
        return dw, dth


def rhs(state: FlowState) -> tuple[SpectralField, SpectralField]:
    """(dω̂/dt, dθ̂/dt), dealiased; mean tendencies are exactly zero."""
    if not state.is_finite():
        raise NonFiniteError(f"non-finite state at t={state.time}", None)
    grid = state.grid
    dw, dth = _Kernel.for_grid(grid).tendencies(state.omega.coeffs, state.theta.coeffs)
    return SpectralField(dw, grid), SpectralField(dth, grid)


def rk4_step(state: FlowState, dt: float) -> FlowState:
    if dt < 0.0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if dt == 0.0:
        return state
    if not state.is_finite():
        raise NonFiniteError(f"non-finite state at t={state.time}", None)
    kern = _Kernel.for_grid(state.grid)
    w0, t0 = state.omega.coeffs, state.theta.coeffs
    a1, b1 = kern.tendencies(w0, t0)
    a2, b2 = kern.tendencies(w0 + 0.5 * dt * a1, t0 + 0.5 * dt * b1)
    a3, b3 = kern.tendencies(w0 + 0.5 * dt * a2, t0 + 0.5 * dt * b2)
    a4, b4 = kern.tendencies(w0 + dt * a3, t0 + dt * b3)
    w = w0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    th = t0 + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    # the mean modes have zero tendency; keep them bit-identical
    th[0, 0] = t0[0, 0]
    w[0, 0] = w0[0, 0]
    new = FlowState(SpectralField(w, state.grid), SpectralField(th, state.grid), state.time + dt)
    if not new.is_finite():
        raise NonFiniteError(f"non-finite state after step to t={new.time}", state)
    return new


def max_speed(state: FlowState) -> float:
    kern = _Kernel.for_grid(state.grid)
    w = state.omega.coeffs
    u = scipy.fft.ifft2(np.stack([kern.bs1 * w, kern.bs2 * w]) * kern.norm, axes=(1, 2)).real
    return float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2)))


def cfl_dt(state: FlowState, control: StepControl) -> float:
    """min(dt_max, cfl·Δx / (max|u| + 1)); the +1 bounds gravity-wave speeds."""
    dt = min(control.dt_max, control.cfl * state.grid.dx / (max_speed(state) + 1.0))
    if not np.isfinite(dt) or dt < control.dt_min:
        raise CFLCollapseError(
            f"CFL step {dt:.3e} below dt_min={control.dt_min:.3e} at t={state.time}", state
        )
    return dt


def output_times(t_end: float, interval: float) -> np.ndarray:
    count = int(np.floor(t_end / interval + 1e-9))
    return interval * np.arange(count + 1)


def run(
    initial: FlowState,
    control: StepControl,
    observer: Optional[Callable[[FlowState], None]] = None,
    output_interval: Optional[float] = None,
) -> FlowState:
    """Integrate to ``control.t_end``.

    ``observer`` is called with the state at ``t = 0, Δ, 2Δ, ...`` (Δ =
    ``output_interval``, defaulting to ``t_end``); steps are shortened to
    land on those times exactly.  Failures raise a ``SimulationError``
    carrying the last valid state; outputs already observed are kept by the
    caller.
    """
    interval = output_interval or control.t_end or 1.0
    outs = output_times(control.t_end, interval) + initial.time
    t_stop = initial.time + control.t_end
    state = initial
    if observer is not None:
        observer(state)
    next_out = 1
    nsteps = 0
    while state.time < t_stop - 1e-12:
        target = outs[next_out] if next_out < outs.size else t_stop
        dt = cfl_dt(state, control)
        landing = state.time + dt >= target - 1e-12
        if landing:
            dt = target - state.time
        state = rk4_step(state, dt)
        nsteps += 1
        if landing:
            state = replace(state, time=float(target))
            if next_out < outs.size:
                next_out += 1
                if observer is not None:
                    observer(state)
    log.debug("run finished at t=%g after %d steps", state.time, nsteps)
    return state
