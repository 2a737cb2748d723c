from __future__ import annotations

import numpy as np

from .. import ops
from ..exceptions import ShapeError
from ..nn import Module
from ..tensor import Tensor
from .concat import ConcatCompressor, fuse_concat
from .encoder import BevEncoder, bev_encoder
from .mdca import MdcaWeights, mdca
from .plan import CONCAT, MDCA_C_OVER_LR, MDCA_CL_CAT_R, MDCA_CR_CAT_L, FusionPlan


class FusionModule(Module):
    """
    Trainable weights for one FusionPlan.

    ``channels`` maps each present modality to the channel count of its BEV
    map (camera C*ny, radar 16, lidar ny).
    """

    def __init__(self, plan: FusionPlan, channels: dict[str, int], rng: np.random.Generator) -> None:
        self.plan = plan
        self.channels = {m: channels[m] for m in plan.modalities}
        c = plan.model_dim
        ch = self.channels
        self.mdca: MdcaWeights | None = None
        if plan.strategy == CONCAT:
            self.compress = ConcatCompressor(sum(ch.values()), c, rng)
        elif plan.strategy in (MDCA_CR_CAT_L, MDCA_CL_CAT_R):
            partner, rest = _partners(plan.strategy)
            self.mdca = MdcaWeights(
                ch["camera"] + ch[partner],
                [ch["camera"], ch[partner]],
                c,
                plan.heads,
                plan.points,
                rng,
            )
            extra = ch.get(rest, 0)
            self.compress = ConcatCompressor(c + extra, c, rng)
        else:
            lr = ch["lidar"] + ch["radar"]
            self.mdca = MdcaWeights(
                ch["camera"] + lr, [ch["camera"], lr], c, plan.heads, plan.points, rng
            )
            self.compress = None
        self.encoder = BevEncoder(c, rng)

    def forward(
        self,
        camera: Tensor | None = None,
        radar: Tensor | None = None,
        lidar: Tensor | None = None,
    ) -> Tensor:
        return run_fusion(self.plan, self, camera, radar, lidar)


def _partners(strategy: str) -> tuple[str, str]:
    return ("radar", "lidar") if strategy == MDCA_CR_CAT_L else ("lidar", "radar")


def run_fusion(
    plan: FusionPlan,
    module: FusionModule,
    camera: Tensor | None = None,
    radar: Tensor | None = None,
    lidar: Tensor | None = None,
) -> Tensor:
    """Combine per-modality BEV maps per ``plan`` and run the BEV encoder."""
    maps = {"camera": camera, "radar": radar, "lidar": lidar}
    present = tuple(m for m, v in maps.items() if v is not None)
    if present != plan.modalities:
        raise ShapeError(
            op="run_fusion",
            expected=f"maps for {'+'.join(plan.modalities)}",
            got="+".join(present) or "none",
        )
    for name in present:
        if maps[name].shape[0] != module.channels[name]:
            raise ShapeError(
                op="run_fusion",
                expected=f"{module.channels[name]} {name} channels",
                got=str(maps[name].shape),
            )

    if plan.strategy == CONCAT:
        fused = fuse_concat([maps[m] for m in present], module.compress)
    elif plan.strategy == MDCA_C_OVER_LR:
        lr = ops.concat_channels([lidar, radar])
        fused = mdca(camera, lr, [camera, lr], module.mdca)
    else:
        partner, rest = _partners(plan.strategy)
        attended = mdca(camera, maps[partner], [camera, maps[partner]], module.mdca)
        tail = [maps[rest]] if maps[rest] is not None else []
        fused = fuse_concat([attended, *tail], module.compress)
    return bev_encoder(fused, module.encoder)
