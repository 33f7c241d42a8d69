"""
Periodic scalar-field calculus on the grid chart.

Real-to-complex transforms (scipy.fft) keep every field Hermitian in spectrum;
products are formed in sample space and re-enter through rfftn, so no imaginary
drift accumulates. Functions here take plain arrays or duck-typed fields
(anything with `space` and `values`/`components`), so the models layer can
depend on this module without a cycle.
"""

from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable

import numpy as np
import scipy.fft as sfft
import scipy.signal

from conformal_reeb.config import settings
from conformal_reeb.core.exceptions import NonzeroMean, UnsupportedFieldDirection
from conformal_reeb.core.logging import get_logger

logger = get_logger(__name__)


def _workers() -> int:
    return settings.fft_workers


def angular_wavenumbers(n: int, period: float, real: bool = False) -> np.ndarray:
    """2 pi m / L for the FFT ordering of one axis (rfft ordering when real=True)."""
    freq = sfft.rfftfreq(n, d=period / n) if real else sfft.fftfreq(n, d=period / n)
    return 2.0 * np.pi * freq


def _wavevector_grid(shape: tuple[int, ...], periods: tuple[float, ...]) -> list[np.ndarray]:
    """Broadcastable wavenumber arrays for an rfftn spectrum."""
    last = len(shape) - 1
    grids = []
    for axis, (n, period) in enumerate(zip(shape, periods)):
        k = angular_wavenumbers(n, period, real=(axis == last))
        view = [1] * len(shape)
        view[axis] = k.size
        grids.append(k.reshape(view))
    return grids


def dealias_array(values: np.ndarray) -> np.ndarray:
    """2/3-rule filter on every axis."""
    spectrum = sfft.rfftn(values, workers=_workers())
    last = values.ndim - 1
    mask = np.ones(spectrum.shape, dtype=bool)
    for axis, n in enumerate(values.shape):
        modes = np.abs(sfft.rfftfreq(n, d=1.0 / n) if axis == last else sfft.fftfreq(n, d=1.0 / n))
        view = [1] * values.ndim
        view[axis] = modes.size
        mask &= (modes <= n / 3).reshape(view)
    return sfft.irfftn(spectrum * mask, s=values.shape, workers=_workers())


# ============================================================================
# Spectra
# ============================================================================


@dataclass(frozen=True)
class SpectrumField:
    """rfftn coefficients of a real periodic field."""

    coefficients: np.ndarray
    shape: tuple[int, ...]
    periods: tuple[float, ...]

    @classmethod
    def from_samples(cls, values: np.ndarray, periods: tuple[float, ...]) -> "SpectrumField":
        return cls(sfft.rfftn(values, workers=_workers()), tuple(values.shape), tuple(periods))

    def to_samples(self) -> np.ndarray:
        return sfft.irfftn(self.coefficients, s=self.shape, workers=_workers())

    def hermitian_residual(self) -> float:
        """Imaginary part the full spectrum's inverse would carry (0 for rfftn data)."""
        full = sfft.ifftn(sfft.fftn(self.to_samples(), workers=_workers()), workers=_workers())
        return float(np.max(np.abs(full.imag))) if full.size else 0.0

    def round_trip_error(self, values: np.ndarray) -> float:
        return float(np.max(np.abs(self.to_samples() - values)))


# ============================================================================
# Derivatives
# ============================================================================


def partial_array(values: np.ndarray, periods: tuple[float, ...], axis: int) -> np.ndarray:
    """
    Spectral partial derivative along one axis.

    The Nyquist mode is zeroed so the derivative of a real field stays real.
    """
    values = np.asarray(values, dtype=float)
    if settings.dealias:
        values = dealias_array(values)
    n = values.shape[axis]
    spectrum = sfft.rfft(values, axis=axis, workers=_workers())
    k = angular_wavenumbers(n, periods[axis], real=True)
    if n % 2 == 0:
        k = k.copy()
        k[-1] = 0.0
    view = [1] * values.ndim
    view[axis] = k.size
    return sfft.irfft(spectrum * (1j * k.reshape(view)), n=n, axis=axis, workers=_workers())


def spectral_partial(f: Any, axis: int) -> Any:
    """Partial derivative of a grid ScalarField along a coordinate axis."""
    return replace(f, values=partial_array(f.values, f.space.periods, axis))


def finite_difference_partial(values: np.ndarray, periods: tuple[float, ...], axis: int) -> np.ndarray:
    """Second-order central difference on the periodic lattice."""
    h = periods[axis] / values.shape[axis]
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)


def observed_order(resolutions: list[int], errors: list[float]) -> float:
    """Decay rate p in error ~ N^-p, fitted in log-log."""
    slope, _ = np.polyfit(np.log(resolutions), np.log(errors), 1)
    return float(-slope)


# ============================================================================
# Flow averaging and Poisson
# ============================================================================


def _direction_mask(shape: tuple[int, ...], periods: tuple[float, ...], direction: np.ndarray) -> np.ndarray:
    grids = _wavevector_grid(shape, periods)
    direction = np.asarray(direction, dtype=float)
    dot = sum(k * v for k, v in zip(grids, direction))
    magnitude = np.sqrt(sum(k**2 for k in grids)) * np.linalg.norm(direction)
    return np.abs(dot) <= 1e-9 * np.maximum(magnitude, 1.0)


def average_array(values: np.ndarray, periods: tuple[float, ...], direction: np.ndarray) -> np.ndarray:
    """Keep exactly the Fourier modes annihilated by a constant direction."""
    spectrum = sfft.rfftn(values, workers=_workers())
    mask = _direction_mask(values.shape, periods, direction)
    return sfft.irfftn(spectrum * mask, s=values.shape, workers=_workers())


def flow_average(f: Any, direction: np.ndarray | None = None) -> Any:
    """
    Average a grid ScalarField or KForm along the flow of a constant field.

    Args:
        f: ScalarField or KForm on a GridChart
        direction: Constant direction vector, default the t-axis

    Returns:
        Field of the same kind with zero spectrum along the direction
    """
    space = f.space
    if space.kind != "grid":
        raise UnsupportedFieldDirection("flow_average runs on the grid backend only")
    if direction is None:
        direction = np.eye(space.dim)[0]
    if hasattr(f, "components"):
        averaged = np.stack([average_array(c, space.periods, direction) for c in f.components]) if len(f.components) else f.components
        return replace(f, components=averaged)
    return replace(f, values=average_array(f.values, space.periods, direction))


def poisson_array(rho: np.ndarray, periods: tuple[float, ...], tolerance: float = 1e-10) -> np.ndarray:
    """
    Solve sum_i d_i^2 u = rho with zero-mean u.

    Raises:
        NonzeroMean: rho has a constant component
    """
    rho = np.asarray(rho, dtype=float)
    mean = float(np.mean(rho))
    if abs(mean) > tolerance * max(1.0, float(np.max(np.abs(rho)))):
        raise NonzeroMean(mean)
    spectrum = sfft.rfftn(rho, workers=_workers())
    k_squared = sum(k**2 for k in _wavevector_grid(rho.shape, periods))
    k_squared = np.where(k_squared == 0.0, np.inf, k_squared)
    return sfft.irfftn(-spectrum / k_squared, s=rho.shape, workers=_workers())


def poisson_solve(rho: Any, tolerance: float = 1e-10) -> Any:
    """Poisson solve for a grid ScalarField."""
    return replace(rho, values=poisson_array(rho.values, rho.space.periods, tolerance))


def laplacian_array(values: np.ndarray, periods: tuple[float, ...]) -> np.ndarray:
    spectrum = sfft.rfftn(values, workers=_workers())
    k_squared = sum(k**2 for k in _wavevector_grid(values.shape, periods))
    return sfft.irfftn(-k_squared * spectrum, s=values.shape, workers=_workers())


# ============================================================================
# Interpolation and resampling
# ============================================================================


class TrigonometricInterpolant:
    """
    Evaluate a band-limited grid field at arbitrary points.

    Only modes above a relative cutoff are kept, so low-band fixtures evaluate
    in a handful of terms.
    """

    def __init__(self, values: np.ndarray, periods: tuple[float, ...], cutoff: float = 1e-13):
        values = np.asarray(values, dtype=float)
        spectrum = sfft.fftn(values, workers=_workers()) / values.size
        scale = max(float(np.max(np.abs(spectrum))), 1e-300)
        keep = np.nonzero(np.abs(spectrum) > cutoff * scale)
        self.coefficients = spectrum[keep]
        self.wavevectors = np.stack(
            [angular_wavenumbers(n, period)[index] for n, period, index in zip(values.shape, periods, keep)],
            axis=-1,
        )
        logger.debug(f"Interpolant keeps {self.coefficients.size} of {values.size} modes")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape (m, d)."""
        phases = np.exp(1j * (np.asarray(points) @ self.wavevectors.T))
        return (phases @ self.coefficients).real


def trigonometric_interpolant(f: Any) -> Callable[[np.ndarray], np.ndarray]:
    return TrigonometricInterpolant(f.values, f.space.periods)


def resample_array(values: np.ndarray, n: int, axes: Iterable[int] | None = None) -> np.ndarray:
    """
    Change the lattice resolution by Fourier truncation or padding.

    Only the listed axes are resampled; leading component axes must be excluded.
    Defaults to every axis.
    """
    for axis in range(values.ndim) if axes is None else axes:
        if values.shape[axis] != n:
            values = scipy.signal.resample(values, n, axis=axis)
    return values
