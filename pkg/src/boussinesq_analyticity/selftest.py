"""Fast built-in checks on closed-form examples (``boussinesq-analyticity self-test``)."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import bounds
from .analyticity import RadiusEstimate, fit_radius_shell, resolution_guard
from .diagnostics import derivative_cascade, grad_sup_norm, pair_norm, sobolev_norm
from .dynamics import StepControl, cfl_dt, initial_state, rhs, rk4_step
from .harness import build_initial
from .spectral import (
    SpectralField,
    dealias,
    make_grid,
    shell_spectrum,
    spectral_derivative,
    transform_forward,
    transform_inverse,
    velocity_from_vorticity,
)


def _field(grid, f):
    return transform_forward(f, grid)


def _grid_checks():
    g8 = make_grid(8)
    assert g8.k_dealias == 2
    assert sorted(set(g8.k1d.astype(int))) == list(range(-3, 5))
    assert make_grid(256).k_dealias == 85
    try:
        make_grid(7)
    except ValueError:
        pass
    else:
        raise AssertionError("odd n accepted")


def _transform_checks():
    g = make_grid(16)
    x1, _ = g.coords
    c = _field(g, np.ones(g.shape)).coeffs
    assert abs(c[0, 0] - 1) < 1e-15 and np.count_nonzero(np.abs(c) > 1e-15) == 1
    s = _field(g, np.sin(x1))
    assert np.count_nonzero(np.abs(s.coeffs) > 1e-14) == 2
    d = transform_inverse(spectral_derivative(s, (1, 0)))
    assert np.max(np.abs(d - np.cos(x1))) < 1e-13
    d2 = transform_inverse(spectral_derivative(s, (2, 0)))
    assert np.max(np.abs(d2 + np.sin(x1))) < 1e-13


def _dealias_checks():
    g = make_grid(64)
    for k, keep in ((1, True), (30, False)):
        c = np.zeros(g.shape, complex)
        c[k, 0] = c[-k, 0] = 0.5
        out = dealias(SpectralField(c, g)).coeffs
        assert np.array_equal(out, c) if keep else not out.any()


def _biot_savart_checks():
    g = make_grid(32)
    x1, _ = g.coords
    u1, u2 = velocity_from_vorticity(_field(g, np.sin(x1)))
    assert np.max(np.abs(transform_inverse(u1))) < 1e-13
    assert np.max(np.abs(transform_inverse(u2) + np.cos(x1))) < 1e-13


def _norm_checks():
    g = make_grid(32)
    x1, x2 = g.coords
    s = _field(g, np.sin(x1))
    assert abs(sobolev_norm(s, 0) - math.pi * math.sqrt(2)) < 1e-12
    assert abs(sobolev_norm(s, 2) - math.pi * math.sqrt(6)) < 1e-12
    zero = SpectralField.zeros(g)
    assert abs(pair_norm([s, zero], s, 0) - 2 * math.pi) < 1e-12
    assert abs(grad_sup_norm(s) - 1.0) < 1e-13
    assert abs(grad_sup_norm(_field(g, np.sin(x1) + np.sin(x2))) - math.sqrt(2)) < 1e-13
    assert all(v is None for _, v in derivative_cascade([zero, zero], zero, 3))


def _radius_checks():
    j = np.arange(1, 41, dtype=float)
    est = fit_radius_shell(j, np.exp(-j * math.log(2)))
    assert abs(est.tau / math.log(2) - 1) < 0.01 and est.r_squared >= 0.999
    assert math.isinf(fit_radius_shell([1.0], [1.0]).tau)
    assert fit_radius_shell(j, (1 + j) ** -4.0).degraded
    assert resolution_guard(RadiusEstimate(0.7, 0, 1, 3, "shell_fit"), make_grid(256))
    assert not resolution_guard(RadiusEstimate(0.2, 0, 1, 3, "shell_fit"), make_grid(64))
    assert resolution_guard(RadiusEstimate(math.inf, math.nan, None, 0, "shell_fit"), make_grid(8))
    g = make_grid(16)
    c = np.zeros(g.shape, complex)
    c[3, 4] = 1.0
    shells, amps = shell_spectrum(SpectralField(c, g, real=False))
    assert amps[list(shells).index(5)] == 1.0 and np.count_nonzero(amps) == 1


def _dynamics_checks():
    g = make_grid(32)
    hydro = build_initial("hydrostatic", {"a": 1.0}, g)
    dw, dth = rhs(hydro)
    assert not dw.coeffs.any() and not dth.coeffs.any()
    tg = build_initial("taylor_green", {"a": 1.0}, g)
    assert max(np.max(np.abs(f.coeffs)) for f in rhs(tg)) <= 1e-13
    x1, _ = g.coords
    st = initial_state(SpectralField.zeros(g), _field(g, np.sin(x1)))
    assert np.max(np.abs(transform_inverse(rhs(st)[0]) - np.cos(x1))) < 1e-13
    assert rk4_step(hydro, 0.0) == hydro
    after = rk4_step(hydro, 0.1)
    assert np.max(np.abs(after.theta.coeffs - hydro.theta.coeffs)) <= 1e-14
    assert cfl_dt(hydro, StepControl(cfl=0.5, dt_max=0.01)) == 0.01


def _bounds_checks():
    assert bounds.majorant(0) == 0.0
    assert abs(math.exp(bounds.majorant(3)) - 0.375) < 1e-15
    assert abs(bounds.majorant(10) - bounds.majorant(9) - math.log(1000 / 121)) < 1e-14
    assert abs(bounds.combinatorial_ratio((1,)) - 0.25) < 1e-15
    assert abs(bounds.combinatorial_ratio((2,)) - 0.375) < 1e-15
    one = bounds.IntegrandSeries(np.linspace(0, 1, 11), np.ones(11))
    assert bounds.sobolev_growth_bound(0.0, 2.0, 1.0, one) == 2.0
    assert abs(bounds.sobolev_growth_bound(1.0, 2.0, 1.0, one) - 2 * math.e) < 1e-12
    p = bounds.BoundParams(1.0, 1.0, 1.0, 1.0, 3)
    assert bounds.lower_bound_tau(0.0, p, one) == 1.0
    assert abs(bounds.lower_bound_tau(1.0, p, one) - 0.5 / math.e) < 1e-12


CHECKS: dict[str, Callable[[], None]] = {
    "grid": _grid_checks,
    "transforms": _transform_checks,
    "dealias": _dealias_checks,
    "biot_savart": _biot_savart_checks,
    "norms": _norm_checks,
    "radius": _radius_checks,
    "dynamics": _dynamics_checks,
    "bounds": _bounds_checks,
}


def run_self_test(verbose: bool = True) -> list[str]:
    """Run every check; returns the names of failing ones."""
    failures = []
    for name, check in CHECKS.items():
        try:
            check()
        except Exception as exc:  # report every failure, keep going
            failures.append(name)
            if verbose:
                print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            if verbose:
                print(f"ok   {name}")
    return failures
