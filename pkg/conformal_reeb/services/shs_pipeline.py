"""
Metric constructions and the stable Hamiltonian structure.

    g_R   = g~ + 2 a_L (x) a_L,   a_L = flat(R, g~)
    theta = flat(R, g^),          vol = orientation * sqrt(det g^) e^{123}
    Omega = i_R vol,              d theta = tau Omega

g_R itself serves as g^: a unit Killing field is geodesic, which
geodesic_unit_check verifies instead of searching for a new metric.
"""

from dataclasses import dataclass, field

import numpy as np

from conformal_reeb.core.exceptions import KernelInclusionFails, NonUniqueSolve, PreconditionViolated, SHSViolation
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import KForm, Metric, ScalarField, Signature, VectorField, max_norm, stacked
from conformal_reeb.services.exterior_calculus import (
    covariant_derivative,
    exterior_derivative,
    flat,
    interior_product,
    lie_derivative,
    to_dense,
    volume_form,
    wedge,
)
from conformal_reeb.services.lorentz_conformal import killing_residual, unit_residual

logger = get_logger(__name__)

CONDITIONING_THRESHOLD = 1e-6


@dataclass(frozen=True)
class GeodesicReport:
    """Residuals certifying that R is a unit Killing geodesic field of g^."""

    acceleration: float
    killing: float
    unit: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.acceleration, self.killing, self.unit) <= self.tolerance


@dataclass(frozen=True)
class SHS:
    """A verified stable Hamiltonian structure with its Reeb field."""

    theta: KForm
    omega: KForm
    tau: ScalarField
    volume: KForm
    reeb: VectorField
    residuals: dict[str, float] = field(default_factory=dict)


def riemannianize(g_tilde: Metric, R: VectorField, tolerance: float) -> Metric:
    """
    g_R = g~ + 2 a_L (x) a_L.

    Raises:
        PreconditionViolated: g~(R,R) != -1, L_R g~ != 0, or g_R not positive definite
    """
    unit = unit_residual(g_tilde, R, -1.0)
    if unit > tolerance:
        raise PreconditionViolated("unit_timelike", unit)
    killing = killing_residual(g_tilde, R)
    if killing > tolerance:
        raise PreconditionViolated("killing", killing)

    alpha = flat(R, g_tilde)
    outer = np.einsum("a...,b...->ab...", alpha.components, alpha.components)
    g_r = Metric(g_tilde.space, g_tilde.components + 2.0 * outer, Signature.RIEMANNIAN)

    smallest = float(np.min(g_r.eigenvalues()))
    if smallest <= 0:
        raise PreconditionViolated("positive_definite", abs(smallest))
    return g_r


def geodesic_unit_check(g_hat: Metric, R: VectorField, tolerance: float) -> GeodesicReport:
    """Report |nabla_R R|, |L_R g^| and |g^(R,R) - 1|."""
    acceleration_field = covariant_derivative(R, R, g_hat)
    acceleration = float(np.max(np.sqrt(np.abs(g_hat(acceleration_field, acceleration_field).values))))
    report = GeodesicReport(
        acceleration=acceleration,
        killing=killing_residual(g_hat, R),
        unit=unit_residual(g_hat, R, 1.0),
        tolerance=tolerance,
    )
    if not report.passed:
        logger.warning(f"Geodesic/unit check failed: {report}")
    return report


def stabilizing_function(theta: KForm, omega: KForm, tolerance: float) -> ScalarField:
    """
    tau with d theta = tau Omega, by pointwise least squares.

    Raises:
        KernelInclusionFails: d theta is not proportional to Omega
    """
    d_theta = exterior_derivative(theta).components
    weights = np.einsum("i...,i...->...", omega.components, omega.components)
    tau = np.einsum("i...,i...->...", d_theta, omega.components) / weights
    residual = max_norm(d_theta - tau * omega.components)
    if residual > tolerance:
        raise KernelInclusionFails(residual)
    return ScalarField(theta.space, tau)


def reeb_field(theta: KForm, omega: KForm, g_hat: Metric, tolerance: float | None = None) -> VectorField:
    """
    Solve i_R Omega = 0, theta(R) = 1 pointwise.

    Conditioning is measured in a g^-orthonormal frame.

    Raises:
        NonUniqueSolve: smallest singular value below threshold
    """
    space = theta.space
    n = space.dim
    dense = to_dense(omega)
    # rows j < n: (i_R Omega)_j = R^i Omega_ij; last row: theta_i R^i
    system = np.concatenate([np.moveaxis(dense, 0, 1), theta.components[None]], axis=0)
    system = np.moveaxis(system, (0, 1), (-2, -1))
    rhs = np.zeros((n + 1,))
    rhs[-1] = 1.0

    cholesky = np.linalg.cholesky(stacked(g_hat.components))
    orthonormal = np.linalg.inv(np.swapaxes(cholesky, -1, -2))
    singular = np.linalg.svd(system @ orthonormal, compute_uv=False)
    smallest = float(np.min(singular[..., -1]))
    if smallest < CONDITIONING_THRESHOLD:
        raise NonUniqueSolve(smallest)

    solution = np.linalg.pinv(system) @ rhs
    return VectorField(space, np.moveaxis(solution, -1, 0))


def build_theta_omega(g_hat: Metric, R: VectorField, orientation: int, tolerance: float) -> SHS:
    """
    Build (theta, Omega) and verify every SHS axiom and invariance relation.

    Raises:
        SHSViolation: names the failed axiom and its residual
    """
    theta = flat(R, g_hat)
    volume = volume_form(g_hat, orientation)
    omega = interior_product(R, volume)
    d_theta = exterior_derivative(theta)
    theta_omega = wedge(theta, omega)

    residuals: dict[str, float] = {
        "d_omega": exterior_derivative(omega).max_norm(),
        "volume_identity": (theta_omega - volume).max_norm(),
        "theta_of_reeb": max_norm(interior_product(R, theta).components - 1.0),
        "omega_contraction": interior_product(R, omega).max_norm(),
        "lie_theta": lie_derivative(R, theta).max_norm(),
        "lie_omega": lie_derivative(R, omega).max_norm(),
        "lie_volume": lie_derivative(R, theta_omega).max_norm(),
        "contraction_d_theta": interior_product(R, d_theta).max_norm(),
    }
    positivity = float(np.min(orientation * theta_omega.components[0]))
    if positivity <= 0:
        raise SHSViolation("volume_positive", abs(positivity))

    for axiom, residual in residuals.items():
        if residual > tolerance:
            raise SHSViolation(axiom, residual)

    try:
        tau = stabilizing_function(theta, omega, tolerance)
    except KernelInclusionFails as exc:
        raise SHSViolation("kernel_inclusion", exc.residual) from exc
    residuals["kernel_inclusion"] = (d_theta - omega * tau).max_norm()
    residuals["lie_tau"] = lie_derivative(R, tau).max_norm()
    if residuals["lie_tau"] > tolerance:
        raise SHSViolation("lie_tau", residuals["lie_tau"])

    logger.debug(f"SHS residuals: {residuals}")
    return SHS(theta=theta, omega=omega, tau=tau, volume=volume, reeb=R, residuals=residuals)
