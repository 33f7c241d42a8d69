"""
Unit tests for the case split and the almost contact, chi and product structures.
"""

import numpy as np
import pytest

from conformal_reeb.core.exceptions import CaseCheckFailed, SingularAtPoint, ZeroB
from conformal_reeb.models.fields import Endomorphism, KForm, Metric, Signature, VectorField
from conformal_reeb.services.basic_cohomology import BasicDecomposition, DecompositionMethod
from conformal_reeb.services.structure_classifier import (
    AlmostContactStructure,
    Case,
    build_almost_contact,
    chi_isomorphism,
    classify,
    mapping_torus_builder,
    mapping_torus_document,
    min_metric_eigenvalue,
    nijenhuis_normality,
    product_kahler,
)

TWO_PI = 2 * np.pi
TOL = 1e-9


def _structure(state) -> AlmostContactStructure:
    report = state.classification
    shs = state.shs
    return build_almost_contact(report.eta, shs.reeb, state.g_hat, shs.omega, shs.theta, report.case, report.k, TOL)


class TestClassify:
    """Case split on k."""

    def test_heisenberg_is_sasakian(self, pipeline_state):
        report = pipeline_state("heisenberg", "classify").classification
        assert report.case is Case.SASAKIAN
        assert report.k == pytest.approx(1.0)
        assert report.scaling.metric_scale == pytest.approx(0.5)
        assert report.scaling.orientation_sign == -1
        assert report.scaling.contact_factor == pytest.approx(1.0)

    def test_su2_certificate(self, pipeline_state):
        report = pipeline_state("su2_hopf", "classify").classification
        assert report.case is Case.SASAKIAN
        assert report.scaling.metric_scale == pytest.approx(1.0)
        assert report.scaling.contact_factor == pytest.approx(0.5)

    def test_flat_is_co_kahler(self, pipeline_state):
        report = pipeline_state("flat_t3", "classify").classification
        assert report.case is Case.CO_KAHLER
        assert report.scaling.contact_factor is None
        assert all(residual <= TOL for residual in report.residuals.values())

    def test_twisted_theta_tilde_is_closed(self, pipeline_state):
        """theta - alpha = dt although theta itself is not closed."""
        report = pipeline_state("twisted_t3", "classify").classification
        assert report.case is Case.CO_KAHLER
        assert report.residuals["closed_theta_tilde"] <= 1e-9
        assert np.max(np.abs(report.eta.components[2])) <= 1e-9

    def test_wrong_constant_fails_case_identity(self, pipeline_state):
        """Claiming k = 0.5 on Heisenberg leaves d eta != k Omega."""
        state = pipeline_state("heisenberg", "decompose_basic_class")
        wrong = BasicDecomposition(
            k=0.5, alpha=state.decomposition.alpha, residual=0.0, method=DecompositionMethod.FRAME_EXACT
        )
        with pytest.raises(CaseCheckFailed) as info:
            classify(state.shs, wrong, state.g_hat, TOL)
        assert info.value.equation == "d_eta_k_omega"
        assert info.value.residual == pytest.approx(0.5)


class TestAlmostContact:
    """(eta, xi, phi, g) identities."""

    def test_heisenberg_residuals(self, pipeline_state):
        structure = _structure(pipeline_state("heisenberg", "classify"))
        assert structure.flavor is Case.SASAKIAN
        assert max(structure.residuals.values()) <= 1e-12
        assert "fundamental_d_eta" in structure.residuals

    def test_phi_squared(self, pipeline_state):
        """phi^2 = -I + xi (x) eta."""
        structure = _structure(pipeline_state("su2_hopf", "classify"))
        phi = structure.phi.components
        expected = -np.eye(3) + np.outer(structure.xi.components, structure.eta.components)
        assert np.allclose(phi @ phi, expected, atol=1e-12)

    def test_heisenberg_phi_rotates_e1(self, pipeline_state):
        structure = _structure(pipeline_state("heisenberg", "classify"))
        image = structure.phi(VectorField.basis_vector(structure.eta.space, 0))
        assert np.allclose(image.components, [0.0, -1.0, 0.0])

    def test_co_kahler_fundamental_form_closed(self, pipeline_state):
        structure = _structure(pipeline_state("twisted_t3", "classify"))
        assert structure.residuals["closed_fundamental"] <= 1e-9
        assert structure.residuals["closed_eta"] <= 1e-9


class TestNormality:
    def test_heisenberg_is_normal(self, pipeline_state):
        structure = _structure(pipeline_state("heisenberg", "classify"))
        assert nijenhuis_normality(structure) <= 1e-12

    def test_su2_is_normal(self, pipeline_state):
        structure = _structure(pipeline_state("su2_hopf", "classify"))
        assert nijenhuis_normality(structure) <= 1e-12

    def test_flat_grid_is_normal(self, pipeline_state):
        structure = _structure(pipeline_state("flat_t3_grid", "classify", grid_n=16))
        assert nijenhuis_normality(structure) <= 1e-12

    def test_time_modulated_phi_is_not_normal(self, grid16):
        """phi d/dx = f d/dx + d/dy with f = 0.1 sin(2 pi t) has phi^2 = -I on ker dt but N_phi != 0."""
        t, _, _ = grid16.coordinates()
        f = 0.1 * np.sin(TWO_PI * t)
        phi = np.zeros((3, 3) + grid16.shape)
        phi[1, 1], phi[1, 2] = f, -(1.0 + f**2)
        phi[2, 1], phi[2, 2] = 1.0, -f
        eta = KForm.basis_form(grid16, (0,))
        structure = AlmostContactStructure(
            eta=eta,
            xi=VectorField.basis_vector(grid16, 0),
            phi=Endomorphism(grid16, phi),
            metric=Metric(grid16, np.eye(3), Signature.RIEMANNIAN),
            fundamental=KForm.zero(grid16, 2),
            flavor=Case.CO_KAHLER,
        )
        assert nijenhuis_normality(structure) >= 0.2 * np.pi * (1 - 1e-9)


class TestChiIsomorphism:
    def test_round_trip(self, pipeline_state):
        state = pipeline_state("heisenberg", "classify")
        result = chi_isomorphism(state.classification.eta, state.shs.omega)
        assert result.round_trip <= 1e-12
        assert np.allclose(result.inverse_lambda.components, [0.0, 0.0, 1.0])

    def test_grid_round_trip(self, pipeline_state):
        state = pipeline_state("twisted_t3", "classify", grid_n=16)
        assert chi_isomorphism(state.classification.eta, state.shs.omega).round_trip <= 1e-12

    def test_zero_lambda_is_singular(self, heisenberg_frame):
        with pytest.raises(SingularAtPoint):
            chi_isomorphism(KForm.zero(heisenberg_frame, 1), KForm.basis_form(heisenberg_frame, (0, 1)))


class TestProductKahler:
    """(J, G) on M x M."""

    @pytest.mark.parametrize("a, b", [(0.0, 1.0), (0.5, 2.0), (-1.0, 0.5)])
    def test_flat_product_is_kahler(self, pipeline_state, a, b):
        structure = _structure(pipeline_state("flat_t3", "classify"))
        result = product_kahler(structure, a, b, TOL)
        assert result.residuals["j_squared"] <= 1e-12
        assert result.residuals["metric_compatibility"] <= 1e-12
        assert result.residuals["kahler_form_closed"] <= 1e-12
        assert result.printed_metric_compatibility > 0.1
        assert min_metric_eigenvalue(result) > 0

    def test_grid_product(self, pipeline_state):
        structure = _structure(pipeline_state("twisted_t3", "classify", grid_n=8))
        result = product_kahler(structure, 0.0, 1.0, TOL, product_n=8)
        assert result.complex_structure.shape == (6, 6) + (8,) * 6
        assert result.residuals["j_squared"] <= 1e-12
        assert result.residuals["metric_compatibility"] <= 1e-9

    def test_grid_product_from_finer_chart(self, pipeline_state):
        """Components sampled at N = 32 are resampled onto the 8^6 product chart."""
        structure = _structure(pipeline_state("twisted_t3", "classify", grid_n=32))
        result = product_kahler(structure, 0.5, 2.0, TOL, product_n=8)
        assert result.complex_structure.shape == (6, 6) + (8,) * 6
        assert result.residuals["j_squared"] <= 1e-9
        assert result.residuals["metric_compatibility"] <= 1e-9

    def test_zero_b_rejected(self, pipeline_state):
        structure = _structure(pipeline_state("flat_t3", "classify"))
        with pytest.raises(ZeroB):
            product_kahler(structure, 1.0, 0.0, TOL)


class TestMappingTorus:
    def test_rho_range(self):
        with pytest.raises(ValueError):
            mapping_torus_document(2 * np.pi)
        with pytest.raises(ValueError):
            mapping_torus_document(-0.1)

    def test_field_is_unit_timelike(self):
        spec = mapping_torus_builder(1.0)
        assert np.allclose(spec.metric(spec.candidate_field, spec.candidate_field).values, -1.0)

    def test_classified_co_kahler(self, executor, run_config):
        run = executor.execute(mapping_torus_document(np.sqrt(2.0)), run_config("mapping_torus", stages=("classify",)))
        assert run.succeeded, run.failure
        assert run.state.classification.case is Case.CO_KAHLER
        assert abs(run.state.classification.k) <= 1e-10
