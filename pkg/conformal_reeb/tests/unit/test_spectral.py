"""
Unit tests for the spectral backend.
"""

import numpy as np
import pytest

from conformal_reeb.core.exceptions import NonzeroMean, UnsupportedFieldDirection
from conformal_reeb.models.fields import KForm, ScalarField
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.services.exterior_calculus import exterior_derivative
from conformal_reeb.services.spectral import (
    SpectrumField,
    finite_difference_partial,
    flow_average,
    laplacian_array,
    observed_order,
    partial_array,
    poisson_array,
    poisson_solve,
    resample_array,
    spectral_partial,
    trigonometric_interpolant,
)

TWO_PI = 2 * np.pi


def _band_limited(chart: GridChart, seed: int, band: int = 3) -> np.ndarray:
    """Random zero-mean trigonometric polynomial with modes up to band per axis."""
    rng = np.random.default_rng(seed)
    coordinates = [c / p for c, p in zip(chart.coordinates(), chart.periods)]
    values = np.zeros(chart.shape)
    for mode in np.ndindex(*(2 * band + 1,) * 3):
        k = np.asarray(mode) - band
        if not k.any():
            continue
        phase = TWO_PI * sum(ki * c for ki, c in zip(k, coordinates))
        a, b = rng.normal(size=2)
        values += a * np.cos(phase) + b * np.sin(phase)
    return values


class TestSpectralDerivative:
    """partial_array and the finite-difference oracle."""

    def test_exact_on_band_limited(self, grid16):
        t, x, y = grid16.coordinates()
        f = np.sin(TWO_PI * x) * np.cos(TWO_PI * 2 * y)
        expected = -2 * TWO_PI * np.sin(TWO_PI * x) * np.sin(TWO_PI * 2 * y)
        assert np.max(np.abs(partial_array(f, grid16.periods, 2) - expected)) <= 1e-11

    def test_respects_periods(self):
        """d/dx sin(2 pi x / L) on a period-L axis."""
        chart = GridChart(n=16, periods=(1.0, 2.5, 1.0))
        _, x, _ = chart.coordinates()
        derivative = partial_array(np.sin(TWO_PI * x / 2.5), chart.periods, 1)
        assert np.max(np.abs(derivative - (TWO_PI / 2.5) * np.cos(TWO_PI * x / 2.5))) <= 1e-11

    def test_scalar_field_partial(self, grid16):
        t, _, _ = grid16.coordinates()
        derivative = spectral_partial(ScalarField(grid16, np.cos(TWO_PI * 3 * t)), 0)
        assert derivative.space is grid16
        assert np.max(np.abs(derivative.values + 3 * TWO_PI * np.sin(TWO_PI * 3 * t))) <= 1e-10

    def test_derivative_of_real_field_is_real(self, grid16):
        f = np.random.default_rng(0).normal(size=grid16.shape)
        assert partial_array(f, grid16.periods, 0).dtype == np.float64

    def test_finite_difference_converges_at_second_order(self):
        """The discrepancy from the spectral derivative of the warped factor decays like N^-2."""
        errors = []
        resolutions = [16, 32, 64]
        for n in resolutions:
            chart = GridChart(n=n)
            t, _, _ = chart.coordinates()
            f = np.exp(0.6 * np.sin(TWO_PI * t))
            spectral = partial_array(f, chart.periods, 0)
            errors.append(float(np.max(np.abs(spectral - finite_difference_partial(f, chart.periods, 0)))))
        assert observed_order(resolutions, errors) >= 1.9

    def test_observed_order_of_exact_power_law(self):
        assert observed_order([10, 20, 40], [1.0, 0.25, 0.0625]) == pytest.approx(2.0)


class TestSpectrumField:
    def test_round_trip(self, grid16):
        values = np.random.default_rng(1).normal(size=grid16.shape)
        spectrum = SpectrumField.from_samples(values, grid16.periods)
        assert spectrum.round_trip_error(values) <= 1e-13
        assert spectrum.hermitian_residual() <= 1e-13


class TestFlowAverage:
    """Averaging along the flow of a constant field."""

    def test_time_average_removes_t_dependence(self, grid16):
        t, x, _ = grid16.coordinates()
        f = ScalarField(grid16, np.sin(TWO_PI * t) + np.cos(TWO_PI * x) + np.sin(TWO_PI * t) * np.cos(TWO_PI * x))
        averaged = flow_average(f)
        assert np.max(np.abs(averaged.values - np.cos(TWO_PI * x))) <= 1e-13

    def test_oblique_direction_keeps_invariant_modes(self, grid16):
        """Along (1, 1, 0) the mode sin(2 pi (t - x)) is invariant and sin(2 pi t) averages out."""
        t, x, _ = grid16.coordinates()
        invariant = np.sin(TWO_PI * (t - x))
        f = ScalarField(grid16, invariant + np.sin(TWO_PI * t))
        averaged = flow_average(f, np.array([1.0, 1.0, 0.0]))
        assert np.max(np.abs(averaged.values - invariant)) <= 1e-13

    def test_forms_are_averaged_componentwise(self, grid16):
        t, x, _ = grid16.coordinates()
        components = np.stack([np.cos(TWO_PI * t), np.cos(TWO_PI * x), np.ones(grid16.shape)])
        averaged = flow_average(KForm(grid16, 1, components))
        assert np.max(np.abs(averaged.components[0])) <= 1e-13
        assert np.max(np.abs(averaged.components[1] - np.cos(TWO_PI * x))) <= 1e-13

    @pytest.mark.parametrize("direction", [None, np.array([1.0, 1.0, 0.0])])
    def test_idempotent(self, grid16, direction):
        f = ScalarField(grid16, _band_limited(grid16, seed=3))
        once = flow_average(f, direction)
        assert np.max(np.abs(flow_average(once, direction).values - once.values)) <= 1e-11

    @pytest.mark.parametrize("direction", [None, np.array([1.0, 1.0, 0.0])])
    def test_commutes_with_exterior_derivative(self, grid16, direction):
        a = KForm(grid16, 1, np.stack([_band_limited(grid16, seed=s) for s in (4, 5, 6)]))
        averaged_then_d = exterior_derivative(flow_average(a, direction))
        d_then_averaged = flow_average(exterior_derivative(a), direction)
        assert (averaged_then_d - d_then_averaged).max_norm() <= 1e-10

    def test_frame_backend_rejected(self, flat_frame):
        with pytest.raises(UnsupportedFieldDirection):
            flow_average(ScalarField.constant(flat_frame, 1.0))


class TestPoisson:
    def test_solves_laplacian(self, grid16):
        """Laplacian of sin(2 pi x) is -(2 pi)^2 sin(2 pi x)."""
        _, x, _ = grid16.coordinates()
        rho = ScalarField(grid16, -(TWO_PI**2) * np.sin(TWO_PI * x))
        assert np.max(np.abs(poisson_solve(rho).values - np.sin(TWO_PI * x))) <= 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_inverts_laplacian_of_random_field(self, seed):
        """poisson(laplacian(u)) = u for zero-mean u with modes up to 3 per axis."""
        chart = GridChart(n=16, periods=(1.0, 2.0, 0.5))
        u = _band_limited(chart, seed)
        rho = laplacian_array(u, chart.periods)
        assert np.max(np.abs(poisson_array(rho, chart.periods) - u)) <= 1e-10

    def test_nonzero_mean_rejected(self, grid16):
        with pytest.raises(NonzeroMean):
            poisson_solve(ScalarField.constant(grid16, 1.0))


class TestInterpolationAndResampling:
    def test_interpolant_off_grid(self, grid16):
        t, x, y = grid16.coordinates()
        f = ScalarField(grid16, np.cos(TWO_PI * x) + 0.5 * np.sin(TWO_PI * (t + 2 * y)))
        points = np.random.default_rng(2).uniform(size=(20, 3))
        expected = np.cos(TWO_PI * points[:, 1]) + 0.5 * np.sin(TWO_PI * (points[:, 0] + 2 * points[:, 2]))
        assert np.max(np.abs(trigonometric_interpolant(f)(points) - expected)) <= 1e-12

    def test_resample_preserves_band_limited_field(self):
        coarse, fine = GridChart(n=16), GridChart(n=32)
        _, x, y = coarse.coordinates()
        _, xf, yf = fine.coordinates()
        resampled = resample_array(np.cos(TWO_PI * x) * np.sin(TWO_PI * 3 * y), 32)
        assert np.max(np.abs(resampled - np.cos(TWO_PI * xf) * np.sin(TWO_PI * 3 * yf))) <= 1e-12

    def test_component_axes_are_kept(self):
        """Only the trailing sample axes change size."""
        fine, coarse = GridChart(n=32), GridChart(n=8)
        _, x, _ = fine.coordinates()
        _, xc, _ = coarse.coordinates()
        components = np.stack([np.stack([np.cos(TWO_PI * x) * (i + j) for j in range(3)]) for i in range(3)])
        resampled = resample_array(components, 8, axes=range(2, 5))
        assert resampled.shape == (3, 3, 8, 8, 8)
        assert np.max(np.abs(resampled[1, 2] - 3 * np.cos(TWO_PI * xc))) <= 1e-12
