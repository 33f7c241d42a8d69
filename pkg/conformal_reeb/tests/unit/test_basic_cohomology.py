"""
Unit tests for basic forms and the decomposition d theta = k Omega + d alpha.
"""

import numpy as np
import pytest

from conformal_reeb.core.exceptions import NotBasic, UnsupportedFieldDirection
from conformal_reeb.models.fields import KForm, VectorField
from conformal_reeb.services.basic_cohomology import (
    DecompositionMethod,
    basic_check,
    basic_projection,
    decompose_basic_class,
    invariant_basic_basis,
    verify_nonexact_volume,
)
from conformal_reeb.services.exterior_calculus import exterior_derivative

TWO_PI = 2 * np.pi
TOL = 1e-9


def _decompose(state, tolerance: float = TOL):
    shs = state.shs
    return decompose_basic_class(exterior_derivative(shs.theta), shs.omega, shs.reeb, shs.theta, tolerance)


class TestBasicCheck:
    def test_transverse_invariant_form(self, heisenberg_frame):
        """e1 is basic for the central direction."""
        R = VectorField.basis_vector(heisenberg_frame, 2)
        assert basic_check(KForm.basis_form(heisenberg_frame, (0,)), R, TOL)

    def test_reeb_dual_is_not_basic(self, heisenberg_frame):
        R = VectorField.basis_vector(heisenberg_frame, 2)
        check = basic_check(KForm.basis_form(heisenberg_frame, (2,)), R, TOL)
        assert not check
        assert check.interior_residual == pytest.approx(1.0)

    def test_su2_rotates_transverse_forms(self, su2_frame):
        """L_{e3} e1 is a multiple of e2, so e1 is not invariant."""
        R = VectorField.basis_vector(su2_frame, 2)
        check = basic_check(KForm.basis_form(su2_frame, (0,)), R, TOL)
        assert check.interior_residual == 0.0
        assert check.lie_residual == pytest.approx(2.0)


class TestInvariantBasicBasis:
    def test_heisenberg_dimensions(self, heisenberg_frame):
        R = VectorField.basis_vector(heisenberg_frame, 2)
        assert invariant_basic_basis(R, 1).shape[1] == 2
        assert invariant_basic_basis(R, 2).shape[1] == 1

    def test_su2_has_no_basic_one_forms(self, su2_frame):
        R = VectorField.basis_vector(su2_frame, 2)
        assert invariant_basic_basis(R, 1).shape[1] == 0
        assert invariant_basic_basis(R, 2).shape[1] == 1


class TestBasicProjection:
    def test_grid_average(self, grid16):
        """dt + cos(2 pi t) dx + cos(2 pi x) dy projects to cos(2 pi x) dy along d/dt."""
        t, x, _ = grid16.coordinates()
        a = KForm(grid16, 1, np.stack([np.ones(grid16.shape), np.cos(TWO_PI * t), np.cos(TWO_PI * x)]))
        projected = basic_projection(a, VectorField.basis_vector(grid16, 0))
        assert np.max(np.abs(projected.components[0])) <= 1e-13
        assert np.max(np.abs(projected.components[1])) <= 1e-13
        assert np.max(np.abs(projected.components[2] - np.cos(TWO_PI * x))) <= 1e-13

    def test_frame_projection_is_idempotent(self, heisenberg_frame):
        R = VectorField.basis_vector(heisenberg_frame, 2)
        a = KForm(heisenberg_frame, 1, np.array([0.3, -1.2, 5.0]))
        once = basic_projection(a, R)
        assert np.allclose(once.components, [0.3, -1.2, 0.0])
        assert np.allclose(basic_projection(once, R).components, once.components)

    def test_grid_requires_constant_field(self, grid16):
        _, x, _ = grid16.coordinates()
        R = VectorField(grid16, np.stack([np.ones(grid16.shape), np.zeros(grid16.shape), 0.5 * np.sin(TWO_PI * x)]))
        with pytest.raises(UnsupportedFieldDirection):
            basic_projection(KForm.basis_form(grid16, (1,)), R)


class TestDecomposeBasicClass:
    """The constant k."""

    def test_heisenberg_k_is_one(self, pipeline_state):
        decomposition = _decompose(pipeline_state("heisenberg", "build_theta_omega"))
        assert decomposition.k == pytest.approx(1.0, abs=1e-12)
        assert decomposition.method is DecompositionMethod.FRAME_EXACT
        assert decomposition.residual <= 1e-12

    def test_su2_k_is_two(self, pipeline_state):
        decomposition = _decompose(pipeline_state("su2_hopf", "build_theta_omega"))
        assert decomposition.k == pytest.approx(2.0, abs=1e-12)
        assert decomposition.alpha.max_norm() == 0.0

    def test_flat_k_is_zero(self, pipeline_state):
        decomposition = _decompose(pipeline_state("flat_t3", "build_theta_omega"))
        assert abs(decomposition.k) <= 1e-12

    def test_twisted_has_zero_class_and_nonzero_alpha(self, pipeline_state):
        """d theta = -0.2 pi sin(2 pi x) dx^dy is exact: alpha = 0.1 cos(2 pi x) dy."""
        state = pipeline_state("twisted_t3", "build_theta_omega")
        decomposition = _decompose(state)
        _, x, _ = state.spec.space.coordinates()
        assert abs(decomposition.k) <= 1e-10
        assert decomposition.method is DecompositionMethod.GRID_SPECTRAL
        assert decomposition.alpha.max_norm() == pytest.approx(0.1, abs=1e-10)
        assert np.max(np.abs(decomposition.alpha.components[2] - 0.1 * np.cos(TWO_PI * x))) <= 1e-10
        assert decomposition.residual <= 1e-9

    def test_grid_and_frame_agree_on_flat_torus(self, pipeline_state):
        frame = _decompose(pipeline_state("flat_t3", "build_theta_omega"))
        grid = _decompose(pipeline_state("flat_t3_grid", "build_theta_omega"))
        assert abs(frame.k - grid.k) <= 1e-8

    @pytest.mark.parametrize("name", ["twisted_t3", "flat_t3_grid"])
    def test_k_is_gauge_invariant(self, pipeline_state, name):
        """theta + df with basic f = 0.3 sin(2 pi x) cos(2 pi y) leaves k and d alpha unchanged."""
        state = pipeline_state(name, "build_theta_omega", grid_n=16)
        shs = state.shs
        _, x, y = state.spec.space.coordinates()
        f = KForm(state.spec.space, 0, (0.3 * np.sin(TWO_PI * x) * np.cos(TWO_PI * y))[None])
        shifted = shs.theta + exterior_derivative(f)
        reference = _decompose(state)
        gauged = decompose_basic_class(exterior_derivative(shifted), shs.omega, shs.reeb, shifted, TOL)
        assert abs(gauged.k - reference.k) <= 1e-10
        assert (exterior_derivative(gauged.alpha) - exterior_derivative(reference.alpha)).max_norm() <= 1e-9

    def test_closed_basic_shift_on_heisenberg(self, pipeline_state):
        """e^1 is closed and basic, so theta + e^1 keeps k = 1."""
        shs = pipeline_state("heisenberg", "build_theta_omega").shs
        shifted = shs.theta + KForm.basis_form(shs.theta.space, (0,))
        decomposition = decompose_basic_class(exterior_derivative(shifted), shs.omega, shs.reeb, shifted, TOL)
        assert decomposition.k == pytest.approx(1.0, abs=1e-12)

    def test_non_basic_d_theta_rejected(self, grid16):
        """sin(2 pi t) dx^dy changes along d/dt."""
        t, _, _ = grid16.coordinates()
        R = VectorField.basis_vector(grid16, 0)
        omega = KForm.basis_form(grid16, (1, 2))
        theta = KForm.basis_form(grid16, (0,))
        d_theta = KForm(grid16, 2, np.stack([np.zeros(grid16.shape), np.zeros(grid16.shape), np.sin(TWO_PI * t)]))
        with pytest.raises(NotBasic) as info:
            decompose_basic_class(d_theta, omega, R, theta, TOL)
        assert info.value.name == "d_theta"


class TestNonexactVolume:
    def test_heisenberg_volume_positive(self, pipeline_state):
        state = pipeline_state("heisenberg", "build_theta_omega")
        assert verify_nonexact_volume(state.shs.theta, state.shs.omega).passed

    def test_twisted_volume_is_one(self, pipeline_state):
        state = pipeline_state("twisted_t3", "build_theta_omega")
        result = verify_nonexact_volume(state.shs.theta, state.shs.omega)
        assert result.integral == pytest.approx(1.0, abs=1e-12)

    def test_reversed_orientation_fails(self, pipeline_state):
        state = pipeline_state("flat_t3", "build_theta_omega")
        assert not verify_nonexact_volume(state.shs.theta, -state.shs.omega).passed
