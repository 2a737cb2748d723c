from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from ..exceptions import ValidationError
from ..lookups import list_fusion_strategies
from ..validators import normalize_modalities, validate_positive_int

CONCAT = "concat"
MDCA_CR_CAT_L = "mdca_cr_cat_l"
MDCA_CL_CAT_R = "mdca_cl_cat_r"
MDCA_C_OVER_LR = "mdca_c_over_lr"

_STRATEGY_ALIASES: dict[str, str] = {
    "concat": CONCAT,
    "mdca_c_r_then_cat_l": MDCA_CR_CAT_L,
    "(c x r) cat l": MDCA_CR_CAT_L,
    "mdca_c_l_then_cat_r": MDCA_CL_CAT_R,
    "(c x l) cat r": MDCA_CL_CAT_R,
    "mdca_c_over_lcatr": MDCA_C_OVER_LR,
    "c x (l cat r)": MDCA_C_OVER_LR,
}


def strategy_requirements() -> dict[str, tuple[str, ...]]:
    """strategy code -> modalities it needs (empty = any non-empty subset)."""
    table = list_fusion_strategies()
    out: dict[str, tuple[str, ...]] = {}
    for code, required in zip(table["strategy_code"], table["required_modalities"]):
        out[code] = normalize_modalities(required) if required.strip() else ()
    return out


def validate_strategy(strategy: str) -> str:
    """Normalise a strategy code or alias; raises ValidationError if unknown."""
    if not isinstance(strategy, str):
        raise ValidationError(f"fusion strategy must be a string, got {type(strategy).__name__}.")
    key = strategy.strip().lower()
    codes = strategy_requirements()
    key = _STRATEGY_ALIASES.get(key, key)
    if key not in codes:
        raise ValidationError(
            f"Unknown fusion strategy '{strategy}'. Allowed values are {', '.join(codes)}."
        )
    return key


@dataclass(frozen=True)
class FusionPlan:
    """Which modalities are present and how they are combined."""

    modalities: tuple[str, ...] = ("camera", "radar", "lidar")
    strategy: str = CONCAT
    heads: int = 4
    points: int = 4
    model_dim: int = 64

    def __post_init__(self) -> None:
        modalities = normalize_modalities(self.modalities)
        strategy = validate_strategy(self.strategy)
        heads = validate_positive_int("heads", self.heads)
        points = validate_positive_int("points", self.points)
        model_dim = validate_positive_int("model_dim", self.model_dim)
        missing = [m for m in strategy_requirements()[strategy] if m not in modalities]
        if missing:
            raise ValidationError(
                f"Fusion strategy '{strategy}' requires {', '.join(missing)} "
                f"but the plan only has {', '.join(modalities)}."
            )
        if strategy != CONCAT and model_dim % heads:
            raise ValidationError(
                f"model_dim ({model_dim}) must be divisible by heads ({heads})."
            )
        object.__setattr__(self, "modalities", modalities)
        object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "model_dim", model_dim)

    @classmethod
    def create(cls, modalities: str | Iterable[str], strategy: str = CONCAT, **kwargs: int) -> FusionPlan:
        return cls(normalize_modalities(modalities), strategy, **kwargs)

    def has(self, modality: str) -> bool:
        return modality in self.modalities

    @property
    def uses_mdca(self) -> bool:
        return self.strategy != CONCAT
