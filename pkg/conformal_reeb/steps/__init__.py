"""
Pipeline stages

Each stage wraps one service operation behind the Stage contract:
- hypothesis_steps: validation, causal character, conformal factor, normalization
- shs_steps: Riemannian metric, SHS, non-exact volume, basic class
- structure_steps: case split, almost contact structure, normality, chi, product Kahler
- gate_steps: closed-orbit and Betti corollaries
"""

from conformal_reeb.steps.base import BaseStage
from conformal_reeb.steps.registry import STAGE_ORDER, create_stage

__all__ = [
    "BaseStage",
    "STAGE_ORDER",
    "create_stage",
]
