"""
Lie frame backend.

A FrameAlgebra is a global coframe e^1..e^n on a compact quotient of a unimodular
Lie group, given by structure constants c[i, j, k] = c^i_{jk} with
[e_j, e_k] = c^i_{jk} e_i. Fields on this backend are left-invariant, so their
components are constants and every frame derivative vanishes.
"""

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from conformal_reeb.core.exceptions import AntisymmetryViolation, JacobiViolation, SpecificationError

JACOBI_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FrameAlgebra:
    """Structure constants of a 3- or 6-dimensional Lie algebra."""

    c: np.ndarray
    frame_volume: float = 1.0
    group: str | None = None

    kind: ClassVar[str] = "frame"

    def __post_init__(self):
        constants = np.array(self.c, dtype=float)
        constants.setflags(write=False)
        object.__setattr__(self, "c", constants)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return ()

    @property
    def structure_constants(self) -> np.ndarray:
        return self.c

    def derivative(self, values: np.ndarray, axis: int) -> np.ndarray:
        """e_axis applied to invariant components."""
        return np.zeros_like(values)

    def integrate(self, values: np.ndarray) -> float:
        """Integral over the normalized quotient."""
        return self.frame_volume * float(values)

    def point_label(self, flat_index: int) -> str:
        return "frame"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameAlgebra):
            return NotImplemented
        return (
            np.array_equal(self.c, other.c)
            and self.frame_volume == other.frame_volume
            and self.group == other.group
        )

    __hash__ = None


def jacobi_tensor(c: np.ndarray) -> np.ndarray:
    """J[i,j,k,l] = sum_m c^m_{jk} c^i_{ml} + c^m_{kl} c^i_{mj} + c^m_{lj} c^i_{mk}."""
    return (
        np.einsum("mjk,iml->ijkl", c, c)
        + np.einsum("mkl,imj->ijkl", c, c)
        + np.einsum("mlj,imk->ijkl", c, c)
    )


def validate_frame_algebra(
    c: np.ndarray | FrameAlgebra,
    frame_volume: float = 1.0,
    group: str | None = None,
) -> FrameAlgebra:
    """
    Validate structure constants and wrap them as a FrameAlgebra.

    Args:
        c: Array of shape (n, n, n) with c[i, j, k] = c^i_{jk}, or an existing algebra
        frame_volume: Volume of the compact quotient in the frame normalization
        group: Optional group realization tag used by the flow integrator

    Returns:
        The validated FrameAlgebra

    Raises:
        AntisymmetryViolation: c^i_{jk} + c^i_{kj} != 0 somewhere
        JacobiViolation: Jacobi residual above 1e-12
    """
    if isinstance(c, FrameAlgebra):
        frame_volume, group, c = c.frame_volume, c.group, c.c

    constants = np.asarray(c, dtype=float)
    if constants.ndim != 3 or len(set(constants.shape)) != 1 or constants.shape[0] not in (3, 6):
        raise SpecificationError(f"Structure constants must have shape (n, n, n) with n in {{3, 6}}, got {constants.shape}")
    if not np.all(np.isfinite(constants)):
        raise SpecificationError("Structure constants must be finite")

    symmetric_part = np.abs(constants + constants.transpose(0, 2, 1))
    if symmetric_part.max() > 0.0:
        i, j, k = np.unravel_index(int(np.argmax(symmetric_part)), symmetric_part.shape)
        raise AntisymmetryViolation((int(i) + 1, int(j) + 1, int(k) + 1), float(symmetric_part[i, j, k]))

    jacobi = np.abs(jacobi_tensor(constants))
    if jacobi.max() > JACOBI_TOLERANCE:
        index = np.unravel_index(int(np.argmax(jacobi)), jacobi.shape)
        raise JacobiViolation(tuple(int(i) + 1 for i in index), float(jacobi[index]))

    return FrameAlgebra(c=constants, frame_volume=frame_volume, group=group)


def abelian(dim: int = 3, frame_volume: float = 1.0) -> FrameAlgebra:
    return FrameAlgebra(c=np.zeros((dim, dim, dim)), frame_volume=frame_volume, group="abelian")


def product_algebra(algebra: FrameAlgebra) -> FrameAlgebra:
    """Block-diagonal structure constants of the Lie algebra of M x M."""
    n = algebra.dim
    c = np.zeros((2 * n, 2 * n, 2 * n))
    c[:n, :n, :n] = algebra.c
    c[n:, n:, n:] = algebra.c
    return FrameAlgebra(c=c, frame_volume=algebra.frame_volume**2)
