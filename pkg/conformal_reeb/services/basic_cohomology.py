"""
Basic forms of the Reeb flow and the decomposition d theta = k Omega + d alpha.

A form a is basic when i_R a = 0 and L_R a = 0. Uniqueness of k rests on the
fact that the basic second cohomology of a Riemannian flow on a closed oriented
3-manifold is at most one-dimensional, and that [Omega]_B != 0 (checked by
verify_nonexact_volume).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import null_space

from conformal_reeb.core.exceptions import NotBasic, QuotientUnavailable, UnsupportedFieldDirection
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import KForm, VectorField, basis
from conformal_reeb.services.exterior_calculus import (
    basis_differential,
    exterior_derivative,
    interior_product,
    lie_derivative,
    to_dense,
    wedge,
)
from conformal_reeb.services.spectral import average_array, poisson_array

logger = get_logger(__name__)


class DecompositionMethod(str, Enum):
    FRAME_EXACT = "frame-exact"
    GRID_SPECTRAL = "grid-spectral"


@dataclass(frozen=True)
class BasicCheck:
    interior_residual: float
    lie_residual: float
    tolerance: float

    @property
    def is_basic(self) -> bool:
        return self.interior_residual <= self.tolerance and self.lie_residual <= self.tolerance

    def __bool__(self) -> bool:
        return self.is_basic


@dataclass(frozen=True)
class BasicDecomposition:
    """d theta = k Omega + d alpha with alpha basic."""

    k: float
    alpha: KForm
    residual: float
    method: DecompositionMethod


@dataclass(frozen=True)
class NonexactVolume:
    integral: float

    @property
    def passed(self) -> bool:
        return self.integral > 0


def basic_check(a: KForm, R: VectorField, tolerance: float) -> BasicCheck:
    """Residuals of i_R a and L_R a."""
    interior = interior_product(R, a).max_norm() if a.degree > 0 else 0.0
    return BasicCheck(interior_residual=interior, lie_residual=lie_derivative(R, a).max_norm(), tolerance=tolerance)


# ============================================================================
# Frame backend: the finite invariant complex
# ============================================================================


def _basis_matrix(space, degree: int, operator) -> np.ndarray:
    """Matrix of a linear operator on constant k-forms, columns indexed by basis forms."""
    columns = []
    for index in basis(space.dim, degree):
        columns.append(operator(KForm.basis_form(space, index)).components.reshape(-1))
    rows = len(columns[0]) if columns else 0
    return np.array(columns).T if columns else np.zeros((rows, 0))


def invariant_basic_basis(R: VectorField, degree: int) -> np.ndarray:
    """Columns spanning constant forms killed by i_R and L_R."""
    space = R.space
    lie = _basis_matrix(space, degree, lambda form: lie_derivative(R, form))
    if degree > 0:
        interior = _basis_matrix(space, degree, lambda form: interior_product(R, form))
        lie = np.vstack([lie, interior])
    return null_space(lie)


def _remove_reeb_component(a: KForm, R: VectorField) -> KForm:
    """a - lambda ^ i_R a with lambda = R_flat / |R|^2 in the frame reference metric."""
    if a.degree == 0:
        return a
    norm_squared = np.einsum("i...,i...->...", R.components, R.components)
    lam = KForm(a.space, 1, R.components / norm_squared)
    return a - wedge(lam, interior_product(R, a))


def basic_projection(a: KForm, R: VectorField, tolerance: float = 1e-12) -> KForm:
    """
    Project a form onto basic forms.

    Grid: the R-component is removed, then the form is averaged along the
    constant field R. Frame: orthogonal projection onto invariant basic forms.

    Raises:
        UnsupportedFieldDirection: grid field R is not constant
    """
    stripped = _remove_reeb_component(a, R)
    space = a.space
    if space.kind == "grid":
        if not R.is_constant(tolerance):
            raise UnsupportedFieldDirection("Flow averaging on the grid needs a constant field")
        direction = R.mean()
        averaged = np.stack([average_array(c, space.periods, direction) for c in stripped.components])
        return KForm(space, a.degree, averaged)

    span = invariant_basic_basis(R, a.degree)
    projected = span @ (span.T @ stripped.components.reshape(-1))
    return KForm(space, a.degree, projected)


# ============================================================================
# Decomposition
# ============================================================================


def _require_basic(name: str, a: KForm, R: VectorField, tolerance: float) -> None:
    check = basic_check(a, R, tolerance)
    if not check:
        raise NotBasic(name, max(check.interior_residual, check.lie_residual))


def _decompose_frame(d_theta: KForm, omega: KForm, R: VectorField) -> tuple[float, KForm]:
    span = invariant_basic_basis(R, 1)
    exact = basis_differential(R.space, 1) @ span
    system = np.column_stack([omega.components, exact])
    exact_rank = np.linalg.matrix_rank(exact) if exact.size else 0
    if np.linalg.matrix_rank(system) == exact_rank:
        raise QuotientUnavailable("Omega is exact in the invariant basic complex; k is undetermined")
    solution, *_ = np.linalg.lstsq(system, d_theta.components, rcond=None)
    k = float(solution[0])
    alpha = KForm(R.space, 1, span @ solution[1:])
    return k, alpha


def _decompose_grid(theta: KForm, d_theta: KForm, omega: KForm, R: VectorField, tolerance: float) -> tuple[float, KForm]:
    space = R.space
    d_theta_b = basic_projection(d_theta, R, tolerance)
    omega_b = basic_projection(omega, R, tolerance)

    denominator = space.integrate(wedge(theta, omega_b).components[0])
    if abs(denominator) <= tolerance:
        raise QuotientUnavailable("Omega integrates to zero against theta")
    k = space.integrate(wedge(theta, d_theta_b).components[0]) / denominator

    rho = to_dense(d_theta_b - omega_b * k)
    n = space.dim
    potential = np.zeros_like(rho)
    for i in range(n):
        for j in range(i + 1, n):
            potential[i, j] = poisson_array(rho[i, j], space.periods, tolerance=max(tolerance, 1e-10))
            potential[j, i] = -potential[i, j]
    # alpha_j = sum_i d_i u_ij solves d alpha = rho for closed rho
    alpha = np.stack([sum(space.derivative(potential[i, j], i) for i in range(n)) for j in range(n)])
    return k, KForm(space, 1, alpha)


def decompose_basic_class(
    d_theta: KForm,
    omega: KForm,
    R: VectorField,
    theta: KForm,
    tolerance: float,
) -> BasicDecomposition:
    """
    Find the constant k and basic alpha with d theta = k Omega + d alpha.

    Args:
        d_theta: Exterior derivative of theta (basic)
        omega: The SHS 2-form (basic)
        R: Reeb field
        theta: The SHS 1-form, used to integrate over the leaf space on grids
        tolerance: Residual tolerance

    Returns:
        BasicDecomposition

    Raises:
        NotBasic: d theta or Omega is not basic
        QuotientUnavailable: k cannot be isolated
    """
    _require_basic("d_theta", d_theta, R, tolerance)
    _require_basic("omega", omega, R, tolerance)

    if R.space.kind == "grid":
        k, alpha = _decompose_grid(theta, d_theta, omega, R, tolerance)
        method = DecompositionMethod.GRID_SPECTRAL
    else:
        k, alpha = _decompose_frame(d_theta, omega, R)
        method = DecompositionMethod.FRAME_EXACT

    residual = (d_theta - omega * k - exterior_derivative(alpha)).max_norm()
    logger.info(f"Basic decomposition: k={k:.12g}, residual={residual:.3e} ({method.value})")
    return BasicDecomposition(k=k, alpha=alpha, residual=residual, method=method)


def verify_nonexact_volume(theta: KForm, omega: KForm, orientation: int = 1) -> NonexactVolume:
    """Integral of theta ^ Omega over M; positive means Omega is not basic-exact."""
    coefficient = wedge(theta, omega).components[0]
    return NonexactVolume(integral=orientation * theta.space.integrate(coefficient))
