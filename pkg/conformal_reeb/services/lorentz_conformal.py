"""
Timelike and conformal hypotheses, and the conformal normalization.

For a timelike conformal R with L_R g = sigma g, the rescaled metric
g~ = -g / g(R,R) makes R a unit timelike Killing field.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from conformal_reeb.core.exceptions import NotConformal, NotTimelike
from conformal_reeb.core.logging import get_logger
from conformal_reeb.models.fields import Metric, ScalarField, VectorField, max_norm
from conformal_reeb.services.exterior_calculus import lie_derivative

logger = get_logger(__name__)

RELATIVE_CONFORMAL_GATE = 1e-6


class CausalCharacter(str, Enum):
    """Pointwise sign pattern of g(R,R)."""

    TIMELIKE = "timelike"
    MIXED = "mixed"
    NON_TIMELIKE = "non-timelike"


@dataclass(frozen=True)
class CausalReport:
    character: CausalCharacter
    min_norm: float
    max_norm: float

    @property
    def is_timelike(self) -> bool:
        return self.character is CausalCharacter.TIMELIKE


@dataclass(frozen=True)
class ConformalReport:
    """
    Outcome of the conformal test.

    Properties:
        sigma: Potential function with L_R g = sigma g
        residual: max |L_R g - sigma g|
        threshold: The gate the residual was compared against
        is_killing: sigma and residual both within tolerance
        is_timelike: max g(R,R) < 0
        min_norm, max_norm: Extrema of g(R,R)
    """

    sigma: ScalarField
    residual: float
    threshold: float
    is_killing: bool
    is_timelike: bool
    min_norm: float
    max_norm: float

    @property
    def is_conformal(self) -> bool:
        return self.residual <= self.threshold


def causal_character(R: VectorField, g: Metric) -> CausalReport:
    """Classify R by the sign of g(R,R) over every sample."""
    norms = g(R, R).values
    low, high = float(np.min(norms)), float(np.max(norms))
    if high < 0:
        character = CausalCharacter.TIMELIKE
    elif low < 0:
        character = CausalCharacter.MIXED
    else:
        character = CausalCharacter.NON_TIMELIKE
    return CausalReport(character=character, min_norm=low, max_norm=high)


def conformal_factor(R: VectorField, g: Metric, tolerance: float) -> ConformalReport:
    """
    Extract sigma by pointwise projection <L_R g, g> / <g, g>.

    Args:
        R: Candidate field
        g: Lorentzian metric
        tolerance: Absolute tolerance; the gate is max(tolerance, 1e-6 |L_R g|)

    Returns:
        ConformalReport

    Raises:
        NotConformal: The residual exceeds the gate. The report travels in the error.
    """
    lie = lie_derivative(R, g).components
    gc = g.components
    sigma = np.einsum("ab...,ab...->...", lie, gc) / np.einsum("ab...,ab...->...", gc, gc)
    residual = max_norm(lie - sigma * gc)
    threshold = max(tolerance, RELATIVE_CONFORMAL_GATE * max_norm(lie))
    causal = causal_character(R, g)
    sigma_field = ScalarField(g.space, sigma)

    report = ConformalReport(
        sigma=sigma_field,
        residual=residual,
        threshold=threshold,
        is_killing=bool(sigma_field.max_norm() <= tolerance and residual <= threshold),
        is_timelike=causal.is_timelike,
        min_norm=causal.min_norm,
        max_norm=causal.max_norm,
    )
    if not report.is_conformal:
        logger.info(f"Conformal test failed: residual {residual:.3e} above {threshold:.3e}")
        raise NotConformal(report)
    return report


def normalize_conformal(g: Metric, R: VectorField, tolerance: float) -> Metric:
    """
    g~ = (-1 / g(R,R)) g, under which R is a unit timelike Killing field.

    Raises:
        NotTimelike: g(R,R) >= 0 somewhere
        NotConformal: L_R g is not proportional to g
    """
    causal = causal_character(R, g)
    if not causal.is_timelike:
        raise NotTimelike(causal.character.value, causal.max_norm)
    conformal_factor(R, g, tolerance)
    factor = ScalarField(g.space, -1.0 / g(R, R).values)
    return g * factor


def unit_residual(g: Metric, R: VectorField, target: float) -> float:
    """max |g(R,R) - target|."""
    return max_norm(g(R, R).values - target)


def killing_residual(g: Metric, R: VectorField) -> float:
    """max |L_R g|."""
    return lie_derivative(R, g).max_norm()
