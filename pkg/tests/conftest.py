"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from boussinesq_analyticity.spectral import SpectralField, make_grid, transform_forward


def physical(grid, fn):
    """Spectral field of ``fn(x1, x2)`` sampled on ``grid``."""
    return transform_forward(fn(*grid.coords), grid)


def random_smooth(grid, rng, band=6, amplitude=1.0):
    """Real, zero-mean, band-limited random field (modes with |k| <= band)."""
    keep = (grid.kmag <= band) & (grid.kmag > 0)
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * keep
    f = np.fft.ifftn(c).real
    out = transform_forward(f, grid)
    out.coeffs[0, 0] = 0.0
    return SpectralField(out.coeffs * amplitude / np.max(np.abs(out.coeffs)), grid)


def exponential_field(grid, tau0, rng, c=1.0):
    """Coefficients c·e^{-τ₀|k|} (dealiased band) with random conjugate-symmetric phases."""
    env = c * np.exp(-tau0 * grid.kmag) * grid.dealias_mask
    env[0, 0] = 0.0
    phase = rng.uniform(0.0, 2 * np.pi, grid.shape)
    phase = phase - np.roll(np.flip(phase), 1, axis=(0, 1))
    return SpectralField(env * np.exp(1j * phase), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)


# --------------------------------------------------------------------------
# acceptance criteria: one PASS/FAIL line per criterion in the summary
# --------------------------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.skipped or (rep.when != "call" and rep.passed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "failed": [], "passed": 0})
    if rep.failed:
        entry["failed"].append(item.name)
    elif rep.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number:2d}: {status}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failing: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
