"""
Dataset directory I/O.

Layout::

    <root>/manifest.tsv           one row per keyframe
    <root>/calibs.tsv             one row per (keyframe, camera)
    <root>/frames/<key>.bmos      tensors of one keyframe (BMOS container)

Blob records: ``camera/<i>`` [3, H, W]; ``lidar/<j>/points`` [N, 3],
``lidar/<j>/pose`` [4, 4], ``lidar/<j>/timestamp_us`` [1]; the same three for
``radar/<j>`` with [M, 18] points; ``boxes`` [B, 13].
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from ..boxes import BOX_COLUMNS, boxes_from_array, boxes_to_array
from ..checkpoint import decode_records, encode_records
from ..encoders.camera import CameraBundle
from ..encoders.lidar import LidarSweep
from ..encoders.radar import RadarSweep
from ..exceptions import CheckpointError, DatasetError, MotionBevError, OutputError, ParseError
from ..geometry import CameraCalib, EgoPose
from ..parsing import parse_tsv
from ..tensor import Tensor, make_rng
from ..validators import validate_positive_int, validate_threshold
from .scene import SceneFrame, SceneSpec, generate_scene

MANIFEST = "manifest.tsv"
CALIBS = "calibs.tsv"
FRAMES_DIR = "frames"
FLOAT_FORMAT = "%.17g"

_ROT = [f"r{i}{j}" for i in range(3) for j in range(3)]
_TRANS = ["t0", "t1", "t2"]
MANIFEST_COLUMNS: list[str] = [
    "scene_id",
    "frame_index",
    "timestamp_us",
    "condition",
    "num_cams",
    "num_lidar_sweeps",
    "num_radar_sweeps",
    "num_boxes",
    *_ROT,
    *_TRANS,
    "blob",
]
CALIB_COLUMNS: list[str] = [
    "scene_id",
    "frame_index",
    "camera",
    "height",
    "width",
    "fx",
    "fy",
    "cx",
    "cy",
    *_ROT,
    *_TRANS,
]

_STREAM_SCENES = 7
_STREAM_ADVERSE = 9


def generate_dataset(
    seed: int,
    num_scenes: int,
    frames_per_scene: int,
    adverse_fraction: float = 0.3,
    base_spec: SceneSpec | None = None,
) -> list[SceneFrame]:
    """
    ``num_scenes`` scenes of ``frames_per_scene`` keyframes each.

    round(adverse_fraction * num_scenes) scenes, chosen by ``seed``, are
    degraded, alternating night and rain.
    """
    validate_positive_int("num_scenes", num_scenes)
    validate_threshold("adverse_fraction", adverse_fraction)
    base = base_spec or SceneSpec()
    num_adverse = int(round(adverse_fraction * num_scenes))
    adverse = sorted(make_rng(seed, _STREAM_ADVERSE).permutation(num_scenes)[:num_adverse])
    conditions = ["day"] * num_scenes
    for n, s in enumerate(adverse):
        conditions[s] = "night" if n % 2 == 0 else "rain"
    frames: list[SceneFrame] = []
    for s in range(num_scenes):
        spec = replace(
            base,
            seed=int(make_rng(seed, _STREAM_SCENES, s).integers(0, 2**62)),
            num_frames=frames_per_scene,
            condition=conditions[s],
        )
        frames.extend(generate_scene(spec, scene_id=f"scene{s:04d}"))
    return frames


def frame_pairs(frames: Sequence[SceneFrame]) -> list[tuple[SceneFrame, SceneFrame]]:
    """(current, previous) pairs of consecutive keyframes within each scene."""
    by_key = {(f.scene_id, f.frame_index): f for f in frames}
    pairs = []
    for f in frames:
        prev = by_key.get((f.scene_id, f.frame_index - 1))
        if prev is not None:
            pairs.append((f, prev))
    return pairs


def _pose_values(pose: EgoPose) -> list[float]:
    return [*pose.rotation.ravel().tolist(), *pose.translation.tolist()]


def _frame_records(frame: SceneFrame) -> dict[str, np.ndarray]:
    records: dict[str, np.ndarray] = {}
    for i, image in enumerate(frame.cameras.images):
        records[f"camera/{i}"] = image.data
    for kind, sweeps in (("lidar", frame.lidar), ("radar", frame.radar)):
        for j, sweep in enumerate(sweeps):
            records[f"{kind}/{j}/points"] = sweep.points
            if sweep.pose is not None:
                records[f"{kind}/{j}/pose"] = sweep.pose.to_matrix()
                records[f"{kind}/{j}/timestamp_us"] = np.array([float(sweep.pose.timestamp_us)])
    records["boxes"] = boxes_to_array(frame.boxes)
    return records


def write_dataset(path: str | Path, frames: Sequence[SceneFrame]) -> Path:
    """Write ``frames`` under ``path``; identical frames give identical bytes."""
    root = Path(path)
    manifest_rows = []
    calib_rows = []
    try:
        (root / FRAMES_DIR).mkdir(parents=True, exist_ok=True)
        for frame in frames:
            blob = f"{FRAMES_DIR}/{frame.key}.bmos"
            (root / blob).write_bytes(encode_records(_frame_records(frame)))
            manifest_rows.append(
                [
                    frame.scene_id,
                    frame.frame_index,
                    frame.timestamp_us,
                    frame.condition,
                    len(frame.cameras.images),
                    len(frame.lidar),
                    len(frame.radar),
                    len(frame.boxes),
                    *_pose_values(frame.pose),
                    blob,
                ]
            )
            for c, calib in enumerate(frame.cameras.calibs):
                calib_rows.append(
                    [
                        frame.scene_id,
                        frame.frame_index,
                        c,
                        *calib.image_size,
                        calib.fx,
                        calib.fy,
                        calib.cx,
                        calib.cy,
                        *calib.rotation.ravel().tolist(),
                        *calib.translation.tolist(),
                    ]
                )
        pd.DataFrame(manifest_rows, columns=MANIFEST_COLUMNS).to_csv(
            root / MANIFEST, sep="\t", index=False, float_format=FLOAT_FORMAT
        )
        pd.DataFrame(calib_rows, columns=CALIB_COLUMNS).to_csv(
            root / CALIBS, sep="\t", index=False, float_format=FLOAT_FORMAT
        )
    except OSError as e:
        raise OutputError(path=str(root), message=f"cannot write dataset: {e}") from e
    return root


def _read_table(root: Path, name: str, columns: list[str]) -> pd.DataFrame:
    try:
        text = (root / name).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetError(path=str(root / name), message=f"cannot read {name}: {e}") from e
    try:
        return parse_tsv(text, required_columns=columns)
    except ParseError as e:
        raise DatasetError(path=str(root / name), message=str(e)) from e


def _floats(row: pd.Series, columns: list[str]) -> np.ndarray:
    return np.array([float(row[c]) for c in columns])


def _sweeps(
    records: dict[str, np.ndarray], kind: str, count: int, frame_key: str, blob: str
) -> list[LidarSweep] | list[RadarSweep]:
    cls = LidarSweep if kind == "lidar" else RadarSweep
    sweeps = []
    for j in range(count):
        name = f"{kind}/{j}/points"
        if name not in records:
            raise DatasetError(path=blob, frame=frame_key, field=name, message="record missing")
        pose = None
        if f"{kind}/{j}/pose" in records:
            stamp = records.get(f"{kind}/{j}/timestamp_us", np.zeros(1))
            pose = EgoPose.from_matrix(records[f"{kind}/{j}/pose"], int(stamp.reshape(-1)[0]))
        sweeps.append(cls(records[name], sweep_index=j, pose=pose))
    return sweeps


def _load_frame(root: Path, row: pd.Series, calibs: list[CameraCalib]) -> SceneFrame:
    key = f"{row['scene_id']}_{int(row['frame_index']):04d}"
    blob = str(root / row["blob"])
    try:
        records = decode_records((root / row["blob"]).read_bytes(), path=blob)
    except OSError as e:
        raise DatasetError(path=blob, frame=key, message=f"cannot read blob: {e}") from e
    except CheckpointError as e:
        raise DatasetError(path=blob, frame=key, field=e.record, message=e.message) from e

    try:
        n_cams = int(row["num_cams"])
        images = []
        for i in range(n_cams):
            name = f"camera/{i}"
            if name not in records:
                raise DatasetError(path=blob, frame=key, field=name, message="record missing")
            images.append(Tensor(records[name]))
        if "boxes" not in records:
            raise DatasetError(path=blob, frame=key, field="boxes", message="record missing")
        boxes = boxes_from_array(records["boxes"])
        if len(boxes) != int(row["num_boxes"]) or records["boxes"].shape[-1] != len(BOX_COLUMNS):
            raise DatasetError(path=blob, frame=key, field="boxes", message="box count does not match manifest")
        return SceneFrame(
            scene_id=str(row["scene_id"]),
            frame_index=int(row["frame_index"]),
            timestamp_us=int(row["timestamp_us"]),
            cameras=CameraBundle(images, calibs),
            lidar=tuple(_sweeps(records, "lidar", int(row["num_lidar_sweeps"]), key, blob)),
            radar=tuple(_sweeps(records, "radar", int(row["num_radar_sweeps"]), key, blob)),
            pose=EgoPose(
                _floats(row, _ROT).reshape(3, 3), _floats(row, _TRANS), int(row["timestamp_us"])
            ),
            boxes=tuple(boxes),
            condition=str(row["condition"]),
        )
    except DatasetError:
        raise
    except (MotionBevError, ValueError) as e:
        raise DatasetError(path=blob, frame=key, message=str(e)) from e


def _calibs_by_frame(calib_table: pd.DataFrame) -> dict[tuple[str, int], list[CameraCalib]]:
    grouped: dict[tuple[str, int], list[tuple[int, CameraCalib]]] = {}
    for _, row in calib_table.iterrows():
        key = (str(row["scene_id"]), int(row["frame_index"]))
        calib = CameraCalib.from_params(
            float(row["fx"]),
            float(row["fy"]),
            float(row["cx"]),
            float(row["cy"]),
            (int(row["height"]), int(row["width"])),
            rotation=_floats(row, _ROT).reshape(3, 3),
            translation=_floats(row, _TRANS),
        )
        grouped.setdefault(key, []).append((int(row["camera"]), calib))
    return {k: [c for _, c in sorted(v, key=lambda p: p[0])] for k, v in grouped.items()}


def iter_dataset(path: str | Path, workers: int = 4) -> Iterator[SceneFrame]:
    """Yield frames in manifest order, prefetching blobs on ``workers`` threads."""
    root = Path(path)
    manifest = _read_table(root, MANIFEST, MANIFEST_COLUMNS)
    try:
        calibs = _calibs_by_frame(_read_table(root, CALIBS, CALIB_COLUMNS))
    except (MotionBevError, ValueError) as e:
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(path=str(root / CALIBS), message=str(e)) from e

    jobs = []
    for _, row in manifest.iterrows():
        key = (str(row["scene_id"]), int(row["frame_index"]))
        cams = calibs.get(key, [])
        if len(cams) != int(row["num_cams"]):
            raise DatasetError(
                path=str(root / CALIBS),
                frame=f"{key[0]}_{key[1]:04d}",
                field="calibs",
                message=f"expected {row['num_cams']} camera calibrations, found {len(cams)}",
            )
        jobs.append((row, cams))

    if workers <= 1:
        for row, cams in jobs:
            yield _load_frame(root, row, cams)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda job: _load_frame(root, *job), jobs)


def read_dataset(path: str | Path, workers: int = 4) -> list[SceneFrame]:
    """Read every frame listed in the manifest."""
    return list(iter_dataset(path, workers=workers))


def dataset_summary(frames: Sequence[SceneFrame]) -> dict[str, float]:
    """Counts used by the CLI after ``gen``."""
    moving = sum(int(b.moving) for f in frames for b in f.boxes)
    boxes = sum(len(f.boxes) for f in frames)
    return {
        "frames": float(len(frames)),
        "scenes": float(len({f.scene_id for f in frames})),
        "boxes": float(boxes),
        "moving_fraction": moving / boxes if boxes else math.nan,
    }
