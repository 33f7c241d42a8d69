"""
Stage Registry - Centralized stage instantiation boundary.

This module isolates stage creation so the executor only knows stage names.
"""

from conformal_reeb.core.stage_contract import Stage
from conformal_reeb.steps.gate_steps import BettiConsistencyStage, ClosedOrbitScanStage
from conformal_reeb.steps.hypothesis_steps import (
    CausalCharacterStage,
    ConformalFactorStage,
    NormalizeConformalStage,
    ValidateStage,
)
from conformal_reeb.steps.shs_steps import (
    BuildThetaOmegaStage,
    DecomposeBasicClassStage,
    GeodesicUnitCheckStage,
    NonexactVolumeStage,
    RiemannianizeStage,
)
from conformal_reeb.steps.structure_steps import (
    BuildAlmostContactStage,
    ChiIsomorphismStage,
    ClassifyStage,
    NijenhuisNormalityStage,
    ProductKahlerStage,
)

_STAGES = (
    ValidateStage,
    CausalCharacterStage,
    ConformalFactorStage,
    NormalizeConformalStage,
    RiemannianizeStage,
    GeodesicUnitCheckStage,
    BuildThetaOmegaStage,
    NonexactVolumeStage,
    DecomposeBasicClassStage,
    ClassifyStage,
    BuildAlmostContactStage,
    NijenhuisNormalityStage,
    ChiIsomorphismStage,
    ProductKahlerStage,
    ClosedOrbitScanStage,
    BettiConsistencyStage,
)

# Proof order
STAGE_ORDER: tuple[str, ...] = tuple(stage.name for stage in _STAGES)

_BY_NAME = {stage.name: stage for stage in _STAGES}


def create_stage(name: str) -> Stage:
    """
    Instantiate a stage by name.

    This is the single boundary for stage creation.
    """
    try:
        return _BY_NAME[name]()
    except KeyError:
        raise ValueError(f"Unknown stage: {name}") from None
