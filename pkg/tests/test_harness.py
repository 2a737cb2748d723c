from __future__ import annotations

import importlib
import itertools
import json
import math

import numpy as np
import pytest
from PIL import Image

from motionbev.exceptions import (
    DatasetError,
    ParseError,
    TrainingDivergedError,
    ValidationError,
)
from motionbev.fusion.plan import strategy_requirements
from motionbev.harness import (
    ExperimentConfig,
    ablation_matrix,
    bev_image,
    build_model,
    evaluate,
    frame_target,
    load_train_state,
    micro_config,
    micro_scene_spec,
    new_train_state,
    pipeline_gradcheck,
    predict,
    render_bev,
    render_predictions,
    resolve_config,
    save_train_state,
    train,
)
from motionbev.harness.probe import PROBE_TOLERANCE
from motionbev.harness.render import BACKGROUND, EGO_COLOR, GT_COLOR, PRED_COLOR
from motionbev.head import SegmentationOutput
from motionbev.metrics import MetricsReport
from motionbev.synthgen import generate_scene, write_dataset
from motionbev.tensor import Tensor
from motionbev.validators import modality_label

training = importlib.import_module("motionbev.harness.training")
evaluation = importlib.import_module("motionbev.harness.evaluation")
ablation = importlib.import_module("motionbev.harness.ablation")


@pytest.fixture(scope="module")
def frames():
    return generate_scene(micro_scene_spec(0))


def _config(tmp_path, name: str = "run", **overrides) -> ExperimentConfig:
    run = tmp_path / name
    base = {
        "iterations": 2,
        "batch_size": 2,
        "checkpoint_every": 1,
        "checkpoint": str(run / "model.bmos"),
        "output_dir": str(run),
    }
    base.update(overrides)
    return micro_config(0, **base)


# --- config ---


def test_config_defaults_and_views() -> None:
    config = ExperimentConfig()
    assert config.grid.nx == 100 and config.grid.cell_xz == pytest.approx(1.0)
    assert config.plan.modalities == ("camera", "radar", "lidar")
    assert config.correlation.channels == 81
    assert config.loader_workers == 4
    assert config.with_overrides(deterministic=True).loader_workers == 1


def test_config_json_round_trip(tmp_path) -> None:
    config = micro_config(3, modalities="C+L", fusion_strategy="mdca_cl_cat_r")
    path = config.save(tmp_path / "cfg.json")
    loaded = ExperimentConfig.load(path)
    assert loaded == config
    assert json.loads(path.read_text(encoding="utf-8"))["modalities"] == ["camera", "lidar"]


def test_config_precedence(tmp_path) -> None:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"lr": 0.1, "seed": 4}), encoding="utf-8")
    config = resolve_config(path, {"lr": 0.2, "seed": None})
    assert config.lr == 0.2
    assert config.seed == 4
    assert resolve_config().lr == pytest.approx(3e-4)


@pytest.mark.parametrize(
    "overrides",
    [
        {"learning_rate": 0.1},
        {"sweep_count": 2},
        {"modalities": "C+L", "fusion_strategy": "mdca_cr_cat_l"},
        {"threshold": 1.0},
        {"model_dim": 10, "fusion_strategy": "mdca_c_over_lcatr"},
        {"align_sweeps": "yes"},
        {"corr_d": 3, "corr_stride": 2},
    ],
)
def test_config_rejects_invalid_values(overrides) -> None:
    with pytest.raises(ValidationError):
        ExperimentConfig().with_overrides(**overrides)


def test_config_load_errors(tmp_path) -> None:
    with pytest.raises(ParseError):
        ExperimentConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ParseError):
        ExperimentConfig.load(bad)


# --- model ---


def _shape_sweep() -> list[tuple[str, str, int]]:
    subsets = [
        combo
        for r in (1, 2, 3)
        for combo in itertools.combinations(("camera", "radar", "lidar"), r)
    ]
    cases = []
    for strategy, required in strategy_requirements().items():
        for combo, sweeps in itertools.product(subsets, (1, 3, 5)):
            if set(required) <= set(combo):
                cases.append((modality_label(combo), strategy, sweeps))
    return cases


@pytest.mark.parametrize("modalities,strategy,sweeps", _shape_sweep())
def test_model_output_shape(frames, modalities: str, strategy: str, sweeps: int) -> None:
    config = micro_config(0, modalities=modalities, fusion_strategy=strategy, sweep_count=sweeps)
    model = build_model(config)
    out = model(frames[1], frames[0])
    assert out.logits.shape == (1, 20, 20)
    assert np.all((out.probs.data > 0.0) & (out.probs.data < 1.0))
    names = [n for n, _ in model.named_parameters()]
    assert any(n.startswith("camera.") for n in names) == ("C" in modalities)


def test_shape_sweep_covers_every_strategy() -> None:
    cases = _shape_sweep()
    assert len(cases) == 36
    assert {s for _, s, _ in cases} == set(strategy_requirements())


def test_model_init_is_seeded(frames) -> None:
    a = build_model(micro_config(1)).state_dict()
    b = build_model(micro_config(1)).state_dict()
    c = build_model(micro_config(2)).state_dict()
    assert a.keys() == b.keys()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_model_without_alignment_or_warp(frames) -> None:
    config = micro_config(0, align_sweeps=False, warp_previous=False, sweep_count=1)
    out = build_model(config)(frames[1], frames[0])
    assert out.probs.shape == (1, 20, 20)


# --- training ---


def test_zero_learning_rate_keeps_parameters(tmp_path, frames) -> None:
    config = _config(tmp_path, lr=0.0, iterations=1)
    before = build_model(config).state_dict()
    state = train(config, frames=frames)
    after = state.model.state_dict()
    assert all(np.array_equal(before[k], after[k]) for k in before)
    assert state.iteration == 1 and len(state.losses) == 1


def test_resume_matches_uninterrupted_run(tmp_path, frames) -> None:
    full = train(_config(tmp_path, "full"), frames=frames)

    first = _config(tmp_path, "resumed", iterations=1)
    train(first, frames=frames)
    resumed = train(first.with_overrides(iterations=2), frames=frames, resume=first.checkpoint)

    assert resumed.iteration == full.iteration == 2
    assert resumed.losses == full.losses
    a, b = full.model.state_dict(), resumed.model.state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    restored = load_train_state(first.checkpoint, first)
    assert restored.iteration == 2
    assert restored.optimizer.state.step == 2


def test_training_writes_outputs_and_warns_on_overwrite(tmp_path, frames) -> None:
    config = _config(tmp_path, iterations=1)
    calls = []
    train(config, frames=frames, progress=lambda i, loss: calls.append((i, loss)))
    assert [i for i, _ in calls] == [1]
    curve = (tmp_path / "run" / "loss_curve.tsv").read_text(encoding="utf-8").splitlines()
    assert curve[0] == "iteration\tloss"
    assert len(curve) == 2
    with pytest.warns(RuntimeWarning, match="Overwriting"):
        train(config.with_overrides(iterations=0), frames=frames)


def test_training_needs_frame_pairs(tmp_path, frames) -> None:
    with pytest.raises(DatasetError):
        train(_config(tmp_path), frames=frames[:1])


def test_divergence_dumps_batch(tmp_path, frames, monkeypatch) -> None:
    monkeypatch.setattr(training, "bce_loss", lambda probs, gt: Tensor(np.array(np.nan)))
    config = _config(tmp_path)
    with pytest.raises(TrainingDivergedError) as info:
        train(config, frames=frames)
    assert info.value.iteration == 0
    dump = json.loads((tmp_path / "run" / "diverged_000000.json").read_text(encoding="utf-8"))
    assert dump["frames"] == ["scene0000_0001<-scene0000_0000"] * 2
    assert dump["losses"] == [None, None]


# --- evaluation and rendering ---


def test_evaluate_with_ground_truth_predictions(tmp_path, frames, monkeypatch) -> None:
    config = _config(tmp_path)
    save_train_state(config.checkpoint, new_train_state(config))

    def perfect(model, frame, prev):
        mask = Tensor(frame_target(frame, config).mask[None])
        return SegmentationOutput(logits=mask, probs=mask)

    monkeypatch.setattr(evaluation, "predict", perfect)
    report = evaluate(config, frames=frames, output=tmp_path / "scores")
    assert report.frames == 1
    assert report.fp == 0 and report.fn == 0
    assert report.tp == 0 or report.iou == 1.0
    assert (tmp_path / "scores.tsv").is_file() and (tmp_path / "scores.json").is_file()


def test_evaluate_real_model_and_condition_filter(tmp_path, frames) -> None:
    config = _config(tmp_path)
    save_train_state(config.checkpoint, new_train_state(config))
    report = evaluate(config, frames=frames)
    assert report.frames == 1
    assert (tmp_path / "run" / "metrics.json").is_file()
    with pytest.raises(DatasetError):
        evaluate(config, frames=frames, conditions=["night"])


def test_deterministic_runs_write_identical_metrics(tmp_path, frames) -> None:
    dataset = str(write_dataset(tmp_path / "ds", frames))
    outputs = []
    for name in ("first", "second"):
        config = _config(
            tmp_path, name, dataset=dataset, eval_dataset=dataset, deterministic=True
        )
        train(config)
        evaluate(config, output=tmp_path / name / "m")
        outputs.append(tmp_path / name / "m")
    for suffix in (".json", ".tsv"):
        first, second = (p.with_name(p.name + suffix).read_bytes() for p in outputs)
        assert first == second
    assert (tmp_path / "first" / "loss_curve.tsv").read_bytes() == (
        tmp_path / "second" / "loss_curve.tsv"
    ).read_bytes()


def test_predict_does_not_record_a_tape(frames) -> None:
    model = build_model(micro_config(0))
    out = predict(model, frames[1], frames[0])
    assert not out.probs.requires_grad


def test_bev_image_layout() -> None:
    pred = np.zeros((4, 3))
    gt = np.zeros((4, 3))
    gt[0, 0] = 1.0
    pred[3, 2] = 1.0
    image = bev_image(pred, gt, scale=2)
    assert image.shape == (6, 8, 3) and image.dtype == np.uint8
    # cell (i, k) lands at row nz - 1 - k, column i
    np.testing.assert_array_equal(image[4, 0], GT_COLOR)
    np.testing.assert_array_equal(image[0, 6], PRED_COLOR)
    np.testing.assert_array_equal(image[2, 4], EGO_COLOR)
    np.testing.assert_array_equal(image[5, 7], BACKGROUND)


def test_bev_image_background_only() -> None:
    image = bev_image(np.zeros((5, 5)), np.zeros((5, 5)), scale=1)
    mask = np.ones((5, 5), dtype=bool)
    mask[2, 2] = False
    assert (image[mask] == BACKGROUND.astype(np.uint8)).all()
    with pytest.raises(ValidationError):
        bev_image(np.zeros((5, 5)), np.zeros((5, 5)), scale=0)


def test_render_bev_is_byte_stable(tmp_path) -> None:
    rng = np.random.default_rng(0)
    pred, gt = rng.uniform(size=(1, 6, 5)), rng.uniform(size=(6, 5)) > 0.5
    a = render_bev(pred, gt, tmp_path / "a.png", scale=3)
    b = render_bev(pred, gt, tmp_path / "b.png", scale=3)
    assert a.read_bytes() == b.read_bytes()
    with Image.open(a) as im:
        assert im.size == (6 * 3, 5 * 3)
        assert im.mode == "RGB"


def test_render_predictions_writes_one_image_per_pair(tmp_path, frames) -> None:
    config = _config(tmp_path)
    save_train_state(config.checkpoint, new_train_state(config))
    dataset = write_dataset(tmp_path / "ds", frames)
    paths = render_predictions(config, tmp_path / "png", dataset=dataset, scale=2)
    assert [p.name for p in paths] == ["scene0000_0001.png"]
    with Image.open(paths[0]) as im:
        assert im.size == (40, 40)


# --- ablation ---


def _fake_report(iou: float) -> MetricsReport:
    return MetricsReport(
        iou=iou,
        precision=1.0,
        iou_by_distance={"0-20m": iou, "20-35m": math.nan, "35-50m": math.nan},
        precision_by_distance={"0-20m": 1.0, "20-35m": math.nan, "35-50m": math.nan},
        iou_by_condition={},
        precision_by_condition={},
        macro_iou=iou,
        macro_precision=1.0,
        frames=3,
        tp=1,
        fp=0,
        fn=1,
    )


def test_ablation_grid(tmp_path, monkeypatch) -> None:
    trained, scored = [], []

    def fake_train(config, frames=None):
        trained.append(config)

    def fake_evaluate(config, checkpoint=None, conditions=None, output=None, frames=None):
        scored.append((config.output_dir, conditions, output))
        return _fake_report(0.1 * config.sweep_count + (0.01 if conditions == ["rain"] else 0.0))

    monkeypatch.setattr(ablation, "train", fake_train)
    monkeypatch.setattr(ablation, "evaluate", fake_evaluate)
    base = _config(tmp_path)
    table = ablation_matrix(
        base,
        {"condition": ["rain", "day"], "sweep_count": [3, 1], "modalities": ["L", "camera+radar"]},
        output=tmp_path / "table",
    )
    assert len(trained) == 4
    assert len(scored) == 8
    assert {c.checkpoint for c in trained} == {
        str(tmp_path / "run" / "ablation" / f"modalities-{m}_sweep_count-{s}" / "model.bmos")
        for m in ("L", "C+R")
        for s in (3, 1)
    }
    assert list(table.columns[:3]) == ["modalities", "sweep_count", "condition"]
    assert table["modalities"].tolist() == ["C+R"] * 4 + ["L"] * 4
    assert table["sweep_count"].tolist()[:4] == [1, 1, 3, 3]
    assert table["condition"].tolist()[:2] == ["day", "rain"]
    assert table.loc[0, "iou"] == pytest.approx(0.1)
    assert table.loc[1, "iou"] == pytest.approx(0.11)
    assert table["points"].tolist() == [base.points] * 8
    assert table["corr_d"].tolist() == [base.corr_d] * 8

    lines = (tmp_path / "table.tsv").read_text(encoding="utf-8").splitlines()
    assert "n/a" in lines[1]
    records = json.loads((tmp_path / "table.json").read_text(encoding="utf-8"))
    assert len(records) == 8 and records[0]["iou_20-35m"] is None


def test_ablation_rejects_unknown_axis(tmp_path) -> None:
    with pytest.raises(ValidationError):
        ablation_matrix(_config(tmp_path), {"learning_rate": [0.1]})
    with pytest.raises(ValidationError):
        ablation_matrix(_config(tmp_path), {"sweep_count": []})


# --- end-to-end gradient probe ---


@pytest.mark.parametrize("seed", [0, 1])
def test_pipeline_gradcheck(seed: int) -> None:
    report = pipeline_gradcheck(seed, probes=12)
    assert report.checked == 12
    assert report.passed(PROBE_TOLERANCE), report
