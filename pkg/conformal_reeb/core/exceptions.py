"""
Custom exceptions for the classifier.
Provides domain-specific error types grouped by exit status.

Families:
    SpecificationError  exit 4  the input could not be read as a valid problem instance
    HypothesisError     exit 2  the input is not a timelike conformal field of the required kind
    InvariantError      exit 3  an internal identity failed to hold numerically
"""

from typing import Any


class ConformalReebError(Exception):
    """Base exception for all classifier errors."""

    code: str = "CONFORMAL_REEB_ERROR"
    exit_code: int = 3

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


# ============================================================================
# Specification errors (exit 4)
# ============================================================================


class SpecificationError(ConformalReebError):
    """Raised when a problem instance cannot be parsed or is malformed."""

    code = "SPECIFICATION_ERROR"
    exit_code = 4


class ParseError(SpecificationError):
    """Raised when a spec file cannot be read or does not match the schema."""

    code = "PARSE_ERROR"

    def __init__(self, source: str, detail: str):
        self.source = source
        self.detail = detail
        super().__init__(f"Could not parse {source}: {detail}")


class JacobiViolation(SpecificationError):
    """Raised when structure constants fail the Jacobi identity."""

    code = "JACOBI_VIOLATION"

    def __init__(self, indices: tuple[int, int, int, int], residual: float):
        self.indices = indices
        super().__init__(
            f"Jacobi identity fails at (i,j,k,l)={indices} with residual {residual:.3e}",
            residual=residual,
        )


class AntisymmetryViolation(SpecificationError):
    """Raised when c^i_{jk} + c^i_{kj} is nonzero."""

    code = "ANTISYMMETRY_VIOLATION"

    def __init__(self, indices: tuple[int, int, int], residual: float):
        self.indices = indices
        super().__init__(
            f"Structure constants not antisymmetric at (i,j,k)={indices}",
            residual=residual,
        )


class InvalidChart(SpecificationError):
    """Raised when grid resolution or periods are invalid."""

    code = "INVALID_CHART"


class BackendOverrideError(SpecificationError):
    """Raised when a spec cannot be converted to the requested backend."""

    code = "BACKEND_OVERRIDE_ERROR"


class SignatureMismatch(SpecificationError):
    """Raised when metric eigenvalue signs disagree with the declared signature."""

    code = "SIGNATURE_MISMATCH"

    def __init__(self, signature: str, worst_point: str, defect: float, eigenvalues: tuple[float, ...]):
        self.worst_point = worst_point
        self.eigenvalues = eigenvalues
        super().__init__(
            f"Metric is not {signature} at {worst_point}: eigenvalues {', '.join(f'{v:.6g}' for v in eigenvalues)}",
            residual=defect,
        )


# ============================================================================
# Hypothesis errors (exit 2)
# ============================================================================


class HypothesisError(ConformalReebError):
    """Raised when the input field or metric does not meet the classifier's hypotheses."""

    code = "HYPOTHESIS_ERROR"
    exit_code = 2


class DegenerateMetric(HypothesisError):
    """Raised when the metric determinant is too small somewhere."""

    code = "DEGENERATE_METRIC"

    def __init__(self, worst_point: str, determinant: float):
        self.worst_point = worst_point
        super().__init__(
            f"Metric degenerate at {worst_point}: |det| = {abs(determinant):.3e}",
            residual=abs(determinant),
        )


class VanishingField(HypothesisError):
    """Raised when the candidate field has a zero."""

    code = "VANISHING_FIELD"

    def __init__(self, worst_point: str, norm: float):
        self.worst_point = worst_point
        super().__init__(
            f"Candidate field vanishes near {worst_point}: |R|_ref = {norm:.3e}",
            residual=norm,
        )


class NotTimelike(HypothesisError):
    """Raised when g(R,R) < 0 fails somewhere."""

    code = "NOT_TIMELIKE"

    def __init__(self, character: str, max_norm: float):
        self.character = character
        super().__init__(
            f"Candidate field is {character}: max g(R,R) = {max_norm:.6g}",
            residual=max_norm,
        )


class NotConformal(HypothesisError):
    """Raised when L_R g is not pointwise proportional to g. Carries the report."""

    code = "NOT_CONFORMAL"

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"L_R g - sigma g has max norm {report.residual:.3e} above {report.threshold:.3e}",
            residual=report.residual,
        )


# ============================================================================
# Invariant errors (exit 3)
# ============================================================================


class InvariantError(ConformalReebError):
    """Raised when a constructed object fails a required identity."""

    code = "INVARIANT_ERROR"
    exit_code = 3


class DegreeOverflow(InvariantError):
    """Raised when a wedge product would exceed the manifold dimension."""

    code = "DEGREE_OVERFLOW"

    def __init__(self, degree: int, dim: int):
        super().__init__(f"Degree {degree} exceeds dimension {dim}")


class SingularMetricAtPoint(InvariantError):
    """Raised when a metric cannot be inverted at some point."""

    code = "SINGULAR_METRIC_AT_POINT"

    def __init__(self, worst_point: str, determinant: float):
        self.worst_point = worst_point
        super().__init__(
            f"Metric singular at {worst_point}: |det| = {abs(determinant):.3e}",
            residual=abs(determinant),
        )


class NonzeroMean(InvariantError):
    """Raised when a Poisson right-hand side has nonzero mean."""

    code = "NONZERO_MEAN"

    def __init__(self, mean: float):
        super().__init__(f"Poisson source has mean {mean:.3e}", residual=abs(mean))


class PreconditionViolated(InvariantError):
    """Raised when a construction's precondition gate fails."""

    code = "PRECONDITION_VIOLATED"

    def __init__(self, gate: str, residual: float):
        self.gate = gate
        super().__init__(f"Precondition '{gate}' fails with residual {residual:.3e}", residual=residual)


class SHSViolation(InvariantError):
    """Raised when (theta, Omega) fails a stable Hamiltonian axiom."""

    code = "SHS_VIOLATION"

    def __init__(self, axiom: str, residual: float):
        self.axiom = axiom
        super().__init__(f"SHS axiom '{axiom}' fails with residual {residual:.3e}", residual=residual)


class KernelInclusionFails(InvariantError):
    """Raised when d(theta) is not pointwise proportional to Omega."""

    code = "KERNEL_INCLUSION_FAILS"

    def __init__(self, residual: float):
        super().__init__(f"d(theta) - tau Omega has max norm {residual:.3e}", residual=residual)


class NonUniqueSolve(InvariantError):
    """Raised when the Reeb system is ill-conditioned."""

    code = "NON_UNIQUE_SOLVE"

    def __init__(self, singular_value: float):
        super().__init__(
            f"Reeb system smallest singular value {singular_value:.3e} below threshold",
            residual=singular_value,
        )


class NotBasic(InvariantError):
    """Raised when a form expected to be basic is not."""

    code = "NOT_BASIC"

    def __init__(self, name: str, residual: float):
        self.name = name
        super().__init__(f"Form '{name}' is not basic: residual {residual:.3e}", residual=residual)


class QuotientUnavailable(InvariantError):
    """Raised when the flow has no usable leaf-space realization."""

    code = "QUOTIENT_UNAVAILABLE"


class UnsupportedFieldDirection(InvariantError):
    """Raised when a grid flow average is requested along a non-constant field."""

    code = "UNSUPPORTED_FIELD_DIRECTION"


class CaseCheckFailed(InvariantError):
    """Raised when a case-branch identity fails."""

    code = "CASE_CHECK_FAILED"

    def __init__(self, equation: str, residual: float):
        self.equation = equation
        super().__init__(f"Case identity '{equation}' fails with residual {residual:.3e}", residual=residual)


class CompatibilityFailure(InvariantError):
    """Raised when an almost contact metric identity fails."""

    code = "COMPATIBILITY_FAILURE"

    def __init__(self, identity: str, residual: float):
        self.identity = identity
        super().__init__(f"Compatibility '{identity}' fails with residual {residual:.3e}", residual=residual)


class SingularAtPoint(InvariantError):
    """Raised when the map v -> i_v Omega + lambda(v) lambda is not invertible."""

    code = "SINGULAR_AT_POINT"

    def __init__(self, worst_point: str, determinant: float):
        self.worst_point = worst_point
        super().__init__(
            f"chi map singular at {worst_point}: |det| = {abs(determinant):.3e}",
            residual=abs(determinant),
        )


class ZeroB(InvariantError):
    """Raised when the product complex structure is requested with b = 0."""

    code = "ZERO_B"

    def __init__(self):
        super().__init__("Product complex structure requires b != 0")


class StepTooLarge(InvariantError):
    """Raised when the integrator's error estimate exceeds its bound."""

    code = "STEP_TOO_LARGE"

    def __init__(self, step: float, estimate: float, bound: float):
        self.step = step
        super().__init__(
            f"Step {step:.3e} gives error estimate {estimate:.3e} above {bound:.3e}",
            residual=estimate,
        )


class UnsupportedRealization(InvariantError):
    """Raised when no group realization matches a frame algebra."""

    code = "UNSUPPORTED_REALIZATION"


class CorollaryViolation(InvariantError):
    """Raised when a classification contradicts an orbit or Betti corollary."""

    code = "COROLLARY_VIOLATION"

    def __init__(self, message: str):
        super().__init__(message)
