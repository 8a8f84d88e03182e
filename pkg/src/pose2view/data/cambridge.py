"""Loader for the Cambridge Landmarks on-disk layout.

Layout: `<root>/<scene>/dataset_train.txt` / `dataset_test.txt` with three
header lines followed by one `relative/image/path X Y Z W P Q R` row per
sample (position in meters, then quaternion w x y z).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..geometry import Pose, fit_pose_normalizer, quat_canonicalize
from .core import ImageSample, IngestionError, SceneDataset

_HEADER_LINES = 3
_FRAME_NUM_RE = re.compile(r"(\d+)")


def _parse_rows(list_path: Path) -> list[tuple[str, Pose]]:
    if not list_path.is_file():
        raise IngestionError(f"missing dataset list {list_path}")
    rows = []
    for lineno, line in enumerate(list_path.read_text().splitlines(), start=1):
        if lineno <= _HEADER_LINES or not line.strip():
            continue
        fields = line.split()
        if len(fields) != 8:
            raise IngestionError(f"{list_path}:{lineno}: expected 8 fields, got {len(fields)}")
        try:
            numbers = np.array([float(v) for v in fields[1:]])
        except ValueError as exc:
            raise IngestionError(f"{list_path}:{lineno}: non-numeric pose field: {exc}") from exc
        quat = numbers[3:]
        norm = float(np.linalg.norm(quat))
        if not 0.9 <= norm <= 1.1:
            raise IngestionError(f"{list_path}:{lineno}: corrupt quaternion, norm {norm:.4f} outside [0.9, 1.1]")
        rows.append((fields[0], Pose(numbers[:3], quat_canonicalize(quat))))
    if not rows:
        raise IngestionError(f"dataset list {list_path} holds no data rows")
    return rows


def load_cambridge(root_path, scene: str, split: str, image_size: int = 128) -> SceneDataset:
    """Ingest one scene split; the pose normalizer is always fitted on train."""
    scene_dir = Path(root_path) / scene
    rows = _parse_rows(scene_dir / f"dataset_{split}.txt")
    samples = []
    for i, (rel_path, pose) in enumerate(rows):
        image_path = scene_dir / rel_path
        if not image_path.is_file():
            raise IngestionError(f"listed image {image_path} does not exist")
        m = _FRAME_NUM_RE.search(Path(rel_path).stem)
        samples.append(
            ImageSample(
                pose=pose,
                scene_id=scene,
                sequence_id=str(Path(rel_path).parent),
                frame_index=int(m.group(1)) if m else i,
                image_path=image_path,
            )
        )
    if split == "train":
        train_poses = [s.pose for s in samples]
    else:
        train_poses = [pose for _, pose in _parse_rows(scene_dir / "dataset_train.txt")]
    return SceneDataset(
        samples=samples,
        split=split,
        scene_id=scene,
        image_size=image_size,
        normalizer=fit_pose_normalizer(train_poses),
    )
