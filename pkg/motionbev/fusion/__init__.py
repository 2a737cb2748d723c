from .concat import ConcatCompressor, fuse_concat
from .encoder import BevEncoder, bev_encoder
from .mdca import MdcaWeights, mdca, reference_points
from .plan import (
    CONCAT,
    MDCA_C_OVER_LR,
    MDCA_CL_CAT_R,
    MDCA_CR_CAT_L,
    FusionPlan,
    strategy_requirements,
    validate_strategy,
)
from .runner import FusionModule, run_fusion

__all__ = [
    "CONCAT",
    "MDCA_CL_CAT_R",
    "MDCA_CR_CAT_L",
    "MDCA_C_OVER_LR",
    "BevEncoder",
    "ConcatCompressor",
    "FusionModule",
    "FusionPlan",
    "MdcaWeights",
    "bev_encoder",
    "fuse_concat",
    "mdca",
    "reference_points",
    "run_fusion",
    "strategy_requirements",
    "validate_strategy",
]
