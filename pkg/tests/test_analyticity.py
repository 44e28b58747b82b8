"""
Tests for the radius-of-analyticity estimators and the resolution guard.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussinesq_analyticity.analyticity import (
    RadiusEstimate,
    fit_radius_shell,
    radius_from_cascade,
    resolution_guard,
    tau_repr,
)
from boussinesq_analyticity.diagnostics import derivative_cascade
from boussinesq_analyticity.majorant import log_majorant
from boussinesq_analyticity.spectral import make_grid, shell_spectrum, velocity_from_vorticity

from conftest import exponential_field

LN2 = math.log(2.0)


def exponential_spectrum(tau, count=40, scale=1.0):
    j = np.arange(1, count + 1, dtype=float)
    return j, scale * np.exp(-tau * j)


class TestShellFit:
    def test_exact_exponential(self):
        est = fit_radius_shell(*exponential_spectrum(LN2))
        assert est.tau == pytest.approx(LN2, rel=0.01)
        assert est.tau == pytest.approx(0.69315, abs=1e-5)
        assert est.r_squared >= 0.999
        assert est.method == "shell_fit"
        assert not est.degraded

    def test_single_mode_is_infinite(self):
        est = fit_radius_shell([1.0, 2.0, 3.0], [1.0, 0.0, 0.0])
        assert math.isinf(est.tau)
        assert not est.degraded
        assert not est.finite

    def test_power_law_flagged(self):
        j = np.arange(1, 41, dtype=float)
        est = fit_radius_shell(j, (1 + j) ** -4.0)
        assert est.r_squared < 0.97
        assert est.degraded

    def test_head_shells_excluded(self):
        j, a = exponential_spectrum(0.5)
        a[:2] = 1e3  # a non-asymptotic head does not bias the slope
        assert fit_radius_shell(j, a).tau == pytest.approx(0.5, rel=1e-12)

    def test_floor_excludes_tail(self):
        j, a = exponential_spectrum(1.0, 60)
        a[a < 1e-13] = 1e-15
        est = fit_radius_shell(j, a, 1e-13)
        assert est.tau == pytest.approx(1.0, rel=1e-12)
        assert est.shells_used == np.count_nonzero(a[2:] > 1e-13)

    def test_growing_spectrum_errors(self):
        j = np.arange(1, 11, dtype=float)
        with pytest.raises(ValueError, match="not decaying"):
            fit_radius_shell(j, np.exp(0.1 * j))

    def test_unsorted_errors(self):
        with pytest.raises(ValueError):
            fit_radius_shell([3.0, 2.0, 1.0, 4.0], [1.0, 0.5, 0.2, 0.1])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 2.0), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, tau, scale):
        base = fit_radius_shell(*exponential_spectrum(tau, 20))
        scaled = fit_radius_shell(*exponential_spectrum(tau, 20, scale))
        assert scaled.tau == pytest.approx(base.tau, rel=1e-9)
        assert scaled.intercept == pytest.approx(base.intercept + math.log(scale), abs=1e-9)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.1, 2.0), st.integers(0, 2**32 - 1))
    def test_constructed_fields_within_one_percent(self, tau0, seed):
        g = make_grid(128)
        f = exponential_field(g, tau0, np.random.default_rng(seed))
        est = fit_radius_shell(*shell_spectrum(f))
        assert 0.99 * tau0 <= est.tau <= 1.01 * tau0

    def test_serialization(self):
        assert tau_repr(math.inf) == "inf"
        assert tau_repr(0.5) == 0.5
        d = fit_radius_shell([1.0], [1.0]).to_dict()
        assert d["tau"] == "inf" and d["intercept"] is None


class TestCascadeRatio:
    def _cascade(self, tau0, n=256, seed=3):
        g = make_grid(n)
        rng = np.random.default_rng(seed)
        w = exponential_field(g, tau0, rng)
        th = exponential_field(g, tau0, rng)
        return derivative_cascade(list(velocity_from_vorticity(w)), th, 0)

    def test_single_mode_is_entire(self):
        casc = [(n, 1.0 - log_majorant(n)) for n in range(2, 13)]
        est = radius_from_cascade(casc)
        assert math.isinf(est.tau)
        # the raw ratio M_N/M_{N−1} grows without bound
        raws = [r for _, r, _ in est.per_order]
        assert all(b > a for a, b in zip(raws, raws[1:]))

    def test_geometric_cascade_exact(self):
        casc = [(n, 2.0 - n * math.log(0.4)) for n in range(2, 13)]
        est = radius_from_cascade(casc)
        assert est.tau == pytest.approx(0.4, rel=1e-12)
        assert not est.degraded

    def test_prefactor_removed_by_extrapolation(self):
        # 𝓔_N ∝ N³ / τ^N: the raw ratio carries an O(1/N) bias, the extrapolated one O(1/N²)
        casc = [(n, 3 * math.log(n) + n * math.log(1 / 0.7)) for n in range(2, 13)]
        est = radius_from_cascade(casc)
        n, raw, hat = est.per_order[-1]
        assert abs(raw / 0.7 - 1) > 0.2
        assert abs(hat / 0.7 - 1) < 0.1
        assert abs(hat / 0.7 - 1) < 0.5 * abs(raw / 0.7 - 1)

    @pytest.mark.parametrize("tau0", [0.3, LN2, 1.0])
    def test_agrees_with_shell_fit(self, tau0):
        casc = self._cascade(tau0)
        est = radius_from_cascade(casc)
        assert est.method == "derivative_ratio"
        assert est.tau == pytest.approx(tau0, rel=0.10)

    def test_zero_cascade_errors(self):
        with pytest.raises(ValueError):
            radius_from_cascade([(n, None) for n in range(2, 13)])

    def test_needs_two_consecutive(self):
        with pytest.raises(ValueError):
            radius_from_cascade([(2, 1.0), (3, None), (4, 0.5)])

    def test_two_entries_fallback_degraded(self):
        est = radius_from_cascade([(2, 0.0), (3, 1.0)])
        assert est.tau == pytest.approx(math.exp(-1.0))
        assert est.degraded

    def test_highest_block_used(self):
        casc = [(2, 5.0), (3, 4.0), (4, None)] + [(n, -n * math.log(0.5)) for n in range(5, 10)]
        est = radius_from_cascade(casc)
        assert est.shells_used == 5
        assert est.tau == pytest.approx(0.5)

    def test_spread_flag(self):
        vals = [0.0, 1.0, 1.5, 3.5, 4.0, 7.0]
        est = radius_from_cascade(list(zip(range(2, 8), vals)))
        assert est.degraded


class TestGuard:
    def _est(self, tau):
        return RadiusEstimate(tau, 0.0, 1.0, 10, "shell_fit")

    def test_examples(self):
        assert resolution_guard(self._est(0.7), make_grid(256))
        assert not resolution_guard(self._est(0.2), make_grid(64))
        assert resolution_guard(self._est(math.inf), make_grid(8))

    def test_threshold(self):
        g = make_grid(90)  # k_dealias = 30
        assert resolution_guard(self._est(1.0), g)
        assert not resolution_guard(self._est(0.999), g)

    def test_monotone_degradation(self):
        """Shrinking τ on spectra with an aliased reflection e^{−τ(2K+1−j)}:
        some flag is raised before the shell-fit error reaches 5%."""
        g = make_grid(256)
        K = g.k_dealias
        j = np.arange(1, K + 1, dtype=float)
        flagged = False
        for tau in np.linspace(1.0, 0.02, 50):
            amps = np.exp(-tau * j) + np.exp(-tau * (2 * K + 1 - j))
            est = fit_radius_shell(j, amps)
            flagged |= est.degraded or not resolution_guard(est, g)
            if abs(est.tau / tau - 1) > 0.05:
                assert flagged
                break
        else:
            pytest.fail("constructed spectra never exceeded the error threshold")
