from __future__ import annotations

import itertools

import numpy as np
import pytest

from motionbev.exceptions import ShapeError, ValidationError
from motionbev.fusion import (
    CONCAT,
    MDCA_C_OVER_LR,
    MDCA_CL_CAT_R,
    MDCA_CR_CAT_L,
    FusionModule,
    FusionPlan,
    MdcaWeights,
    mdca,
    reference_points,
    validate_strategy,
)
from motionbev.gradcheck import check_gradients
from motionbev.tensor import Parameter, Tensor, make_rng

SEEDS = range(20)
NX, NZ = 6, 5
CHANNELS = {"camera": 4, "radar": 3, "lidar": 2}


def _maps(rng: np.random.Generator, grad: bool = False) -> dict[str, Tensor]:
    return {
        m: Tensor(rng.standard_normal((c, NX, NZ)), requires_grad=grad)
        for m, c in CHANNELS.items()
    }


def _bilinear(v: np.ndarray, row: float, col: float) -> np.ndarray:
    r0, c0 = int(np.floor(row)), int(np.floor(col))
    fr, fc = row - r0, col - c0
    out = np.zeros(v.shape[0])
    for dr, dc, w in (
        (0, 0, (1 - fr) * (1 - fc)),
        (0, 1, (1 - fr) * fc),
        (1, 0, fr * (1 - fc)),
        (1, 1, fr * fc),
    ):
        r, c = r0 + dr, c0 + dc
        if 0 <= r < v.shape[1] and 0 <= c < v.shape[2]:
            out += w * v[:, r, c]
    return out


def _naive_mdca(a: np.ndarray, b: np.ndarray, values: list[np.ndarray], w: MdcaWeights) -> np.ndarray:
    h, k, m_count, cv = w.heads, w.points, w.num_values, w.head_dim
    nx, nz = a.shape[1:]
    projected = [
        np.einsum("oc,cij->oij", proj.weight.data, v) for proj, v in zip(w.values, values)
    ]
    out = np.zeros((w.model_dim, nx, nz))
    for i in range(nx):
        for j in range(nz):
            src = np.concatenate([a[:, i, j], b[:, i, j]])
            zq = w.query.weight.data @ src + w.query.bias.data
            off = (w.offsets.weight.data @ zq + w.offsets.bias.data).reshape(h, m_count, k, 2)
            logits = (w.attention.weight.data @ zq + w.attention.bias.data).reshape(h, m_count * k)
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            attn = (e / e.sum(axis=1, keepdims=True)).reshape(h, m_count, k)
            for head in range(h):
                acc = np.zeros(cv)
                for m in range(m_count):
                    for p in range(k):
                        d_row, d_col = off[head, m, p]
                        sample = _bilinear(projected[m], i + d_row, j + d_col)
                        acc += attn[head, m, p] * sample
                out[:, i, j] += w.heads_out[head].weight.data @ acc
    if a.shape[0] == w.model_dim:
        out += a
    return out


def _randomize_offsets(w: MdcaWeights, rng: np.random.Generator, scale: float = 0.4) -> None:
    w.offsets.weight = Parameter(scale * rng.standard_normal(w.offsets.weight.shape))
    w.offsets.bias = Parameter(scale * rng.standard_normal(w.offsets.bias.shape))
    w.attention.bias = Parameter(rng.standard_normal(w.attention.bias.shape))


def test_validate_strategy_accepts_codes_and_aliases() -> None:
    assert validate_strategy("concat") == CONCAT
    assert validate_strategy(" MDCA_CR_CAT_L ") == MDCA_CR_CAT_L
    assert validate_strategy("(C x L) cat R") == MDCA_CL_CAT_R
    assert validate_strategy("C x (L cat R)") == MDCA_C_OVER_LR
    with pytest.raises(ValidationError):
        validate_strategy("late_fusion")
    with pytest.raises(ValidationError):
        validate_strategy(3)  # type: ignore[arg-type]


def test_fusion_plan_normalizes_and_checks_requirements() -> None:
    plan = FusionPlan.create("L+C", "mdca_cl_cat_r")
    assert plan.modalities == ("camera", "lidar")
    assert plan.uses_mdca
    assert not plan.has("radar")
    with pytest.raises(ValidationError):
        FusionPlan.create("camera+lidar", MDCA_CR_CAT_L)
    with pytest.raises(ValidationError):
        FusionPlan.create("C+R+L", MDCA_C_OVER_LR, model_dim=10, heads=4)
    # concat has no head constraint
    assert FusionPlan.create("R", CONCAT, model_dim=10, heads=4).model_dim == 10


def test_reference_points_are_cell_centers() -> None:
    ref = reference_points(2, 4)
    assert ref.shape == (8, 2)
    np.testing.assert_allclose(ref[0], [0.25, 0.125])
    np.testing.assert_allclose(ref[5], [0.75, 0.375])


def test_offsets_start_at_zero() -> None:
    w = MdcaWeights(6, [4, 2], 8, 2, 3, make_rng(0))
    assert not w.offsets.weight.data.any()
    assert not w.offsets.bias.data.any()


@pytest.mark.parametrize("seed", range(50))
def test_mdca_matches_naive_loop(seed: int) -> None:
    rng = make_rng(seed, 5)
    maps = _maps(rng)
    a, b = maps["camera"], maps["radar"]
    model_dim = (4, 6, 8)[seed % 3]
    heads = 1 + seed % 2
    points = 1 + (seed // 2) % 2
    w = MdcaWeights(7, [4, 3], model_dim, heads, points, rng)
    _randomize_offsets(w, rng, scale=1.5)
    out = mdca(a, b, [a, b], w)
    assert out.shape == (model_dim, NX, NZ)
    expected = _naive_mdca(a.data, b.data, [a.data, b.data], w)
    np.testing.assert_allclose(out.data, expected, atol=1e-10)


def test_mdca_residual_can_be_disabled() -> None:
    rng = make_rng(9)
    maps = _maps(rng)
    a, b = maps["camera"], maps["lidar"]
    w = MdcaWeights(6, [4, 2], 4, 2, 2, rng)
    with_res = mdca(a, b, [a, b], w)
    without = mdca(a, b, [a, b], w, residual=False)
    np.testing.assert_allclose(with_res.data - without.data, a.data, atol=1e-12)


def test_mdca_rejects_mismatched_inputs() -> None:
    rng = make_rng(1)
    w = MdcaWeights(6, [4, 2], 4, 2, 2, rng)
    a = Tensor(np.zeros((4, NX, NZ)))
    b = Tensor(np.zeros((2, NX, NZ)))
    with pytest.raises(ShapeError):
        mdca(a, Tensor(np.zeros((2, NX, NZ + 1))), [a, b], w)
    with pytest.raises(ShapeError):
        mdca(a, b, [a], w)
    with pytest.raises(ShapeError):
        MdcaWeights(6, [4, 2], 6, 4, 2, rng)


@pytest.mark.parametrize("seed", SEEDS)
def test_mdca_gradients(seed: int) -> None:
    rng = make_rng(seed, 6)
    a = Tensor(rng.standard_normal((3, 4, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((2, 4, 3)), requires_grad=True)
    w = MdcaWeights(5, [3, 2], 4, 2, 2, rng)
    _randomize_offsets(w, rng)
    inputs = [a, b, *w.parameters()]
    report = check_gradients(lambda: mdca(a, b, [a, b], w), inputs, seed=seed, probes=60)
    assert report.passed(1e-4), report


@pytest.mark.parametrize(
    "modalities",
    [
        "+".join(combo)
        for r in (1, 2, 3)
        for combo in itertools.combinations(("camera", "radar", "lidar"), r)
    ],
)
def test_concat_fusion_every_subset(modalities: str) -> None:
    rng = make_rng(2)
    plan = FusionPlan.create(modalities, CONCAT, model_dim=8)
    module = FusionModule(plan, CHANNELS, rng)
    maps = _maps(rng)
    out = module(**{m: maps[m] for m in plan.modalities})
    assert out.shape == (8, NX, NZ)
    assert np.isfinite(out.data).all()


@pytest.mark.parametrize(
    "modalities,strategy",
    [
        ("C+R+L", MDCA_CR_CAT_L),
        ("C+R", MDCA_CR_CAT_L),
        ("C+R+L", MDCA_CL_CAT_R),
        ("C+L", MDCA_CL_CAT_R),
        ("C+R+L", MDCA_C_OVER_LR),
    ],
)
def test_mdca_fusion_placements(modalities: str, strategy: str) -> None:
    rng = make_rng(3)
    plan = FusionPlan.create(modalities, strategy, model_dim=8, heads=2, points=2)
    module = FusionModule(plan, CHANNELS, rng)
    maps = _maps(rng)
    out = module(**{m: maps[m] for m in plan.modalities})
    assert out.shape == (8, NX, NZ)
    names = [n for n, _ in module.named_parameters()]
    assert any(n.startswith("mdca.") for n in names)
    if strategy == MDCA_C_OVER_LR:
        assert module.compress is None


def test_run_fusion_rejects_missing_or_extra_maps() -> None:
    rng = make_rng(4)
    plan = FusionPlan.create("C+R", CONCAT, model_dim=4)
    module = FusionModule(plan, CHANNELS, rng)
    maps = _maps(rng)
    with pytest.raises(ShapeError):
        module(camera=maps["camera"])
    with pytest.raises(ShapeError):
        module(camera=maps["camera"], radar=maps["radar"], lidar=maps["lidar"])
    with pytest.raises(ShapeError):
        module(camera=maps["camera"], radar=maps["lidar"])


def test_fusion_backward_reaches_every_parameter() -> None:
    rng = make_rng(5)
    plan = FusionPlan.create("C+R+L", MDCA_CR_CAT_L, model_dim=4, heads=2, points=2)
    module = FusionModule(plan, CHANNELS, rng)
    maps = _maps(rng)
    out = module(**maps)
    out.backward(rng.standard_normal(out.shape))
    assert all(p.grad is not None for p in module.parameters())
