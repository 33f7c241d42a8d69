"""
Spectral torus backend.

A GridChart samples periodic fields on an N^d lattice (d = 3, or 6 for the
product chart of M x M). The coordinate frame is holonomic, so its structure
constants vanish and frame derivatives are spectral partial derivatives.
"""

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from conformal_reeb.core.exceptions import InvalidChart
from conformal_reeb.services.spectral import partial_array

AXIS_NAMES = {3: ("t", "x", "y"), 6: ("t1", "x1", "y1", "t2", "x2", "y2")}


@dataclass(frozen=True)
class GridChart:
    """Uniform periodic lattice with N points per axis."""

    n: int
    periods: tuple[float, ...] = (1.0, 1.0, 1.0)

    kind: ClassVar[str] = "grid"

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise InvalidChart(f"Grid resolution must be a power of two >= 8, got {self.n}")
        if len(self.periods) not in AXIS_NAMES:
            raise InvalidChart(f"Grid chart must have 3 or 6 periods, got {len(self.periods)}")
        if any(not np.isfinite(period) or period <= 0 for period in self.periods):
            raise InvalidChart(f"Periods must be positive, got {self.periods}")
        object.__setattr__(self, "periods", tuple(float(period) for period in self.periods))

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def structure_constants(self) -> np.ndarray:
        return np.zeros((self.dim,) * 3)

    @property
    def volume(self) -> float:
        return float(np.prod(self.periods))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(period / self.n for period in self.periods)

    def axis(self, index: int) -> np.ndarray:
        """1-D sample coordinates along one axis."""
        return np.arange(self.n) * self.periods[index] / self.n

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sample coordinates, one array of shape `shape` per axis."""
        return tuple(np.meshgrid(*(self.axis(i) for i in range(self.dim)), indexing="ij"))

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray:
        return partial_array(values, self.periods, axis)

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoidal (spectrally exact) integral over the torus."""
        return float(np.mean(values)) * self.volume

    def point_label(self, flat_index: int) -> str:
        index = np.unravel_index(flat_index, self.shape)
        names = AXIS_NAMES[self.dim]
        return ", ".join(f"{names[a]}={index[a] * self.spacing[a]:.4g}" for a in range(self.dim))

    def with_resolution(self, n: int) -> "GridChart":
        return GridChart(n=n, periods=self.periods)
