"""
Case split on k and the resulting almost contact metric structures.

Conventions. Two-forms are evaluated with the determinant convention, so
d_det eta(X,Y) = X eta(Y) - Y eta(X) - eta([X,Y]). The almost contact
identities use the halved convention 2 d eta(X,Y) = X eta(Y) - Y eta(X) - eta([X,Y]),
so "Phi = d eta" reads Phi = d_det eta / 2 and normality reads
N_phi(X,Y) + d_det eta(X,Y) xi = 0.

Structure. With P X = X - theta(X) R and J X = sharp_g^(i_X Omega) on ker theta,

    phi X = eps J(P X) + alpha(eps J P X) R
    g_s   = eta (x) eta + c (g^ - theta (x) theta)
    Phi   = -eps c Omega

Co-Kahler: eps = 1, c = 1. Sasakian: eps = -sign(k), c = |k| / 2, so that
Phi = k Omega / 2 = d eta / 2.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from conformal_reeb.config import settings
from conformal_reeb.core.exceptions import CaseCheckFailed, CompatibilityFailure, SingularAtPoint, ZeroB
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import (
    Endomorphism,
    KForm,
    Metric,
    Signature,
    VectorField,
    max_norm,
    stacked,
)
from conformal_reeb.models.frame_algebra import product_algebra
from conformal_reeb.models.grid_chart import GridChart
from conformal_reeb.models.manifold_spec import ManifoldSpec
from conformal_reeb.schemas.spec_file import RawSpec
from conformal_reeb.services.basic_cohomology import BasicDecomposition
from conformal_reeb.services.exterior_calculus import (
    evaluate,
    exterior_derivative,
    from_dense,
    inverse_metric,
    lie_bracket,
    to_dense,
    wedge,
)
from conformal_reeb.services.shs_pipeline import SHS
from conformal_reeb.services.spectral import resample_array

logger = get_logger(__name__)


class Case(str, Enum):
    """Which structure the Reeb field belongs to."""

    SASAKIAN = "sasakian"
    CO_KAHLER = "co-kahler"


@dataclass(frozen=True)
class ScalingCertificate:
    """
    Normalization constants recorded instead of rescaling theta or Omega.

    Properties:
        k: The basic class constant
        metric_scale: c in g_s = eta (x) eta + c (g^ - theta (x) theta)
        orientation_sign: eps in phi = eps J P + ...
        contact_factor: eta / k has d(eta / k) = Omega, the k = 1 normalization
    """

    k: float
    metric_scale: float
    orientation_sign: int
    contact_factor: float | None


@dataclass(frozen=True)
class AlmostContactStructure:
    """(eta, xi, phi, g) with fundamental 2-form Phi(X,Y) = g(X, phi Y)."""

    eta: KForm
    xi: VectorField
    phi: Endomorphism
    metric: Metric
    fundamental: KForm
    flavor: Case
    residuals: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ClassificationReport:
    """Outcome of the case split, completed by the structure stages."""

    case: Case
    k: float
    eta: KForm
    residuals: dict[str, float]
    scaling: ScalingCertificate
    structure: AlmostContactStructure | None = None
    nijenhuis_residual: float | None = None


# ============================================================================
# Case split
# ============================================================================


def _certificate(case: Case, k: float) -> ScalingCertificate:
    if case is Case.CO_KAHLER:
        return ScalingCertificate(k=k, metric_scale=1.0, orientation_sign=1, contact_factor=None)
    return ScalingCertificate(k=k, metric_scale=abs(k) / 2.0, orientation_sign=-int(np.sign(k)), contact_factor=1.0 / k)


def classify(shs: SHS, decomposition: BasicDecomposition, g_hat: Metric, tolerance: float) -> ClassificationReport:
    """
    Case 1 (|k| <= tol): theta~ = theta - alpha is closed with theta~(R) = 1 and
    theta~ ^ Omega = vol. Case 2: eta = theta - alpha has d eta = k Omega,
    eta(R) = 1 and eta ^ d eta = k vol nowhere zero.

    Raises:
        CaseCheckFailed: names the identity that failed
    """
    k = decomposition.k
    eta = shs.theta - decomposition.alpha
    d_eta = exterior_derivative(eta)
    reeb_value = evaluate(eta, shs.reeb)

    if abs(k) <= tolerance:
        case = Case.CO_KAHLER
        residuals = {
            "closed_theta_tilde": d_eta.max_norm(),
            "theta_tilde_of_reeb": max_norm(reeb_value.values - 1.0),
            "theta_tilde_volume": (wedge(eta, shs.omega) - shs.volume).max_norm(),
        }
    else:
        case = Case.SASAKIAN
        contact = wedge(eta, d_eta)
        residuals = {
            "d_eta_k_omega": (d_eta - shs.omega * k).max_norm(),
            "eta_of_reeb": max_norm(reeb_value.values - 1.0),
            "eta_d_eta_volume": (contact - shs.volume * k).max_norm(),
        }
        smallest = float(np.min(np.abs(contact.components[0])))
        if smallest <= tolerance:
            raise CaseCheckFailed("eta_d_eta_nowhere_zero", smallest)

    for equation, residual in residuals.items():
        if residual > tolerance:
            raise CaseCheckFailed(equation, residual)

    logger.info(f"Classified as {case.value} with k={k:.12g}")
    return ClassificationReport(case=case, k=k, eta=eta, residuals=residuals, scaling=_certificate(case, k))


# ============================================================================
# Almost contact metric structure
# ============================================================================


def _outer(vector: np.ndarray, covector: np.ndarray) -> np.ndarray:
    return np.einsum("i...,j...->ij...", vector, covector)


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,jk...->ik...", a, b)


def build_almost_contact(
    eta: KForm,
    R: VectorField,
    g_hat: Metric,
    omega: KForm,
    theta: KForm,
    case: Case,
    k: float,
    tolerance: float,
) -> AlmostContactStructure:
    """
    Build (eta, xi = R, phi, g_s) and verify every almost contact metric identity.

    Raises:
        CompatibilityFailure: names the failed identity
    """
    space = eta.space
    n = space.dim
    certificate = _certificate(case, k)
    eps, c = certificate.orientation_sign, certificate.metric_scale
    identity = np.eye(n).reshape((n, n) + (1,) * len(space.shape))

    projection = identity - _outer(R.components, theta.components)
    rotation = np.einsum("ia...,ja...->ij...", inverse_metric(g_hat), to_dense(omega))
    phi0 = eps * _compose(rotation, projection)
    alpha = theta.components - eta.components
    phi = phi0 + _outer(R.components, np.einsum("m...,mj...->j...", alpha, phi0))

    theta_outer = _outer(theta.components, theta.components)
    metric = Metric(
        space,
        _outer(eta.components, eta.components) + c * (g_hat.components - theta_outer),
        Signature.RIEMANNIAN,
    )
    fundamental_dense = np.einsum("am...,mb...->ab...", metric.components, phi)
    fundamental = from_dense(space, fundamental_dense, 2)
    d_eta = exterior_derivative(eta)

    phi_squared = _compose(phi, phi)
    compatibility = np.einsum("ma...,mn...,nb...->ab...", phi, metric.components, phi)
    residuals = {
        "eta_of_xi": max_norm(np.einsum("i...,i...->...", eta.components, R.components) - 1.0),
        "phi_xi": max_norm(np.einsum("ij...,j...->i...", phi, R.components)),
        "eta_phi": max_norm(np.einsum("i...,ij...->j...", eta.components, phi)),
        "phi_squared": max_norm(phi_squared + identity - _outer(R.components, eta.components)),
        "metric_compatibility": max_norm(compatibility - metric.components + _outer(eta.components, eta.components)),
        "fundamental_antisymmetry": max_norm(fundamental_dense + fundamental_dense.swapaxes(0, 1)),
    }
    if case is Case.SASAKIAN:
        residuals["fundamental_d_eta"] = (fundamental - d_eta * 0.5).max_norm()
    else:
        residuals["closed_eta"] = d_eta.max_norm()
        residuals["closed_fundamental"] = exterior_derivative(fundamental).max_norm()

    for name, residual in residuals.items():
        if residual > tolerance:
            raise CompatibilityFailure(name, residual)

    if case is Case.SASAKIAN:
        contact = float(np.min(np.abs(wedge(eta, d_eta).components[0])))
        if contact <= tolerance:
            raise CompatibilityFailure("eta_d_eta_nowhere_zero", contact)

    return AlmostContactStructure(
        eta=eta,
        xi=R,
        phi=Endomorphism(space, phi),
        metric=metric,
        fundamental=fundamental,
        flavor=case,
        residuals=residuals,
    )


def nijenhuis_normality(acs: AlmostContactStructure) -> float:
    """max over frame pairs of |N_phi(e_a, e_b) + d_det eta(e_a, e_b) xi|."""
    space = acs.eta.space
    phi = acs.phi
    d_eta = exterior_derivative(acs.eta)
    worst = 0.0
    for a in range(space.dim):
        for b in range(a + 1, space.dim):
            X = VectorField.basis_vector(space, a)
            Y = VectorField.basis_vector(space, b)
            phi_x, phi_y = phi(X), phi(Y)
            tensor = (
                phi(phi(lie_bracket(X, Y)))
                + lie_bracket(phi_x, phi_y)
                - phi(lie_bracket(phi_x, Y))
                - phi(lie_bracket(X, phi_y))
            )
            total = tensor + acs.xi * evaluate(d_eta, X, Y)
            worst = max(worst, total.max_norm())
    return worst


# ============================================================================
# chi isomorphism
# ============================================================================


@dataclass(frozen=True)
class ChiResult:
    """chi(v) = i_v Omega + lambda(v) lambda, its inverse applied to lambda, and the round trip."""

    matrix: np.ndarray
    inverse_lambda: VectorField
    round_trip: float


def chi_isomorphism(lam: KForm, omega: KForm) -> ChiResult:
    """
    Invert v -> i_v Omega + lambda(v) lambda pointwise and apply it to lambda.

    Raises:
        SingularAtPoint: the map is not invertible somewhere
    """
    space = lam.space
    # matrix[j, i] = chi(e_i)_j
    matrix = np.moveaxis(to_dense(omega), 0, 1) + _outer(lam.components, lam.components)
    matrices = stacked(matrix)
    det = np.asarray(np.linalg.det(matrices))
    magnitude = np.abs(det).reshape(-1)
    worst = int(np.argmin(magnitude))
    if magnitude[worst] <= 1e-12:
        raise SingularAtPoint(space.point_label(worst), float(det.reshape(-1)[worst]))

    rhs = np.moveaxis(lam.components, 0, -1)[..., None]
    solution = np.linalg.solve(matrices, rhs)[..., 0]
    inverse_lambda = VectorField(space, np.moveaxis(solution, -1, 0))
    image = np.einsum("ji...,i...->j...", matrix, inverse_lambda.components)
    return ChiResult(matrix=matrix, inverse_lambda=inverse_lambda, round_trip=max_norm(image - lam.components))


# ============================================================================
# Kahler structure on M x M
# ============================================================================


@dataclass(frozen=True)
class ProductKahler:
    """
    (J, G) on the product, with G using the coefficient a^2 + b^2 - 1 on
    alpha(X_2) alpha(Y_2). The printed coefficient a^2 + b^2 + 1 gives
    G(J., J.) != G for every (a, b); its residual is kept for the report.
    """

    complex_structure: np.ndarray
    metric: np.ndarray
    kahler_form: KForm
    residuals: dict[str, float]
    printed_metric_compatibility: float
    note: str


PRINTED_METRIC_NOTE = (
    "The printed product metric uses a^2 + b^2 + 1 on alpha(X2) alpha(Y2), which is not J-invariant "
    "for any (a, b); the verified metric uses a^2 + b^2 - 1."
)


def _product_space(space, product_n: int):
    if space.kind == "frame":
        return product_algebra(space)
    return GridChart(n=product_n, periods=tuple(space.periods) * 2)


def _lift(values: np.ndarray, space, product_n: int, factor: int) -> np.ndarray:
    """Pull a component array on M back to M x M along one projection."""
    if space.kind == "frame":
        return values
    lead = values.shape[: values.ndim - 3]
    sampled = resample_array(values, product_n, axes=range(values.ndim - 3, values.ndim))
    pad = (None,) * 3
    index = (Ellipsis,) + ((slice(None),) * 3 + pad if factor == 1 else pad + (slice(None),) * 3)
    return np.broadcast_to(sampled[index], lead + (product_n,) * 6)


def product_kahler(acs: AlmostContactStructure, a: float, b: float, tolerance: float, product_n: int | None = None) -> ProductKahler:
    """
    The complex structure J_{a,b} and metric G_{a,b} on M x M.

    Raises:
        ZeroB: b == 0
    """
    if b == 0:
        raise ZeroB()
    product_n = product_n or settings.product_grid_n
    space = acs.eta.space
    n = space.dim
    product = _product_space(space, product_n)

    def lifted(values: np.ndarray, factor: int) -> np.ndarray:
        return _lift(values, space, product_n, factor)

    phi = [lifted(acs.phi.components, f) for f in (1, 2)]
    g = [lifted(acs.metric.components, f) for f in (1, 2)]
    alpha = [lifted(acs.eta.components, f) for f in (1, 2)]
    xi = [lifted(acs.xi.components, f) for f in (1, 2)]
    shape = tuple(product.shape)

    J = np.zeros((2 * n, 2 * n) + shape)
    J[:n, :n] = phi[0] - (a / b) * _outer(xi[0], alpha[0])
    J[:n, n:] = -((a**2 + b**2) / b) * _outer(xi[0], alpha[1])
    J[n:, :n] = (1.0 / b) * _outer(xi[1], alpha[0])
    J[n:, n:] = phi[1] + (a / b) * _outer(xi[1], alpha[1])

    def metric_with(coefficient: float) -> np.ndarray:
        G = np.zeros((2 * n, 2 * n) + shape)
        G[:n, :n] = g[0]
        G[:n, n:] = a * _outer(alpha[0], alpha[1])
        G[n:, :n] = a * _outer(alpha[1], alpha[0])
        G[n:, n:] = g[1] + coefficient * _outer(alpha[1], alpha[1])
        return G

    def compatibility(G: np.ndarray) -> float:
        return max_norm(np.einsum("ca...,cd...,db...->ab...", J, G, J) - G)

    printed = metric_with(a**2 + b**2 + 1.0)
    G = metric_with(a**2 + b**2 - 1.0)
    identity = np.eye(2 * n).reshape((2 * n, 2 * n) + (1,) * len(shape))

    # omega_K(X, Y) = G(J X, Y)
    omega_dense = np.einsum("ca...,cb...->ab...", J, G)
    kahler_form = from_dense(product, omega_dense, 2)
    eigenvalues = np.linalg.eigvalsh(stacked(G))

    residuals = {
        "j_squared": max_norm(_compose(J, J) + identity),
        "metric_symmetry": max_norm(G - G.swapaxes(0, 1)),
        "metric_compatibility": compatibility(G),
        "kahler_form_antisymmetry": max_norm(omega_dense + omega_dense.swapaxes(0, 1)),
        "kahler_form_closed": exterior_derivative(kahler_form).max_norm(),
        "metric_positive": max(0.0, -float(np.min(eigenvalues))),
    }
    printed_residual = compatibility(printed)
    logger.info(f"Product Kahler residuals {residuals}; printed metric compatibility {printed_residual:.3e}")
    return ProductKahler(
        complex_structure=J,
        metric=G,
        kahler_form=kahler_form,
        residuals=residuals,
        printed_metric_compatibility=printed_residual,
        note=PRINTED_METRIC_NOTE,
    )


def min_metric_eigenvalue(result: ProductKahler) -> float:
    return float(np.min(np.linalg.eigvalsh(stacked(result.metric))))


# ============================================================================
# Mapping torus fixtures
# ============================================================================


def mapping_torus_document(rho: float, periods: tuple[float, float, float] = (1.0, 1.0, 1.0), n: int = 16) -> RawSpec:
    """
    Spec document for the mapping torus of the rotation by rho of the first circle of T^2.

    The identification (t + L_t, x, y) ~ (t, x + rho L_x / 2 pi, y) is absorbed into
    the coframe dx - s dt with s = rho L_x / (2 pi L_t).
    """
    if not 0.0 <= rho < 2.0 * np.pi:
        raise ValueError(f"rho must lie in [0, 2 pi), got {rho}")
    l_t, l_x, _ = periods
    s = rho * l_x / (2.0 * np.pi * l_t)
    return RawSpec.model_validate(
        {
            "manifold": {"name": f"mapping_torus_{rho:.6g}", "backend": "grid", "n": n, "periods": list(periods)},
            "metric": {
                "signature": "lorentzian",
                "components": {"11": -1.0 + s * s, "12": -s, "22": 1.0, "33": 1.0},
            },
            "field": {"components": [1.0, s, 0.0]},
            "fixture-metadata": {
                "b1": 3,
                "expected_case": "co-kahler",
                "expected_k": 0.0,
                "description": f"Mapping torus of the rotation by {rho:.6g} of the first circle factor",
            },
        }
    )


def mapping_torus_builder(rho: float, periods: tuple[float, float, float] = (1.0, 1.0, 1.0), n: int = 16) -> ManifoldSpec:
    """Validated grid spec realizing the mapping torus."""
    from conformal_reeb.services.spec_loader import validate_spec

    return validate_spec(mapping_torus_document(rho, periods, n))
