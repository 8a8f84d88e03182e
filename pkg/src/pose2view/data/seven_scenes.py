"""Loader for the 7-Scenes on-disk layout.

Layout: `<root>/<scene>/seq-XX/frame-XXXXXX.color.png` with a matching
`frame-XXXXXX.pose.txt` holding a 4x4 row-major camera-to-world matrix as 16
whitespace-separated decimals; `TrainSplit.txt` / `TestSplit.txt` list the
sequences of each split. Poses are stored in the camera-to-world frame as
published and never inverted.
"""

from __future__ import annotations

import re
import warnings
from pathlib import Path

from ..geometry import Pose, fit_pose_normalizer, matrix_to_quat, rotation_deviation
from .core import ImageSample, IngestionError, IngestionWarning, SceneDataset

_SEQ_RE = re.compile(r"^(?:sequence(\d+)|seq-?(\d+))$", re.IGNORECASE)


def _split_sequences(scene_dir: Path, split: str) -> list[str]:
    split_file = scene_dir / ("TrainSplit.txt" if split == "train" else "TestSplit.txt")
    if not split_file.is_file():
        raise IngestionError(f"missing split list {split_file}")
    seqs = []
    for line in split_file.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        m = _SEQ_RE.match(line)
        if not m:
            raise IngestionError(f"unrecognized sequence name {line!r} in {split_file}")
        seqs.append(f"seq-{int(m.group(1) or m.group(2)):02d}")
    if not seqs:
        raise IngestionError(f"empty split list {split_file}")
    return seqs


def _parse_pose_file(pose_path: Path) -> Pose:
    try:
        values = [float(v) for v in pose_path.read_text().split()]
    except (OSError, ValueError) as exc:
        raise IngestionError(f"unparseable pose matrix in {pose_path}: {exc}") from exc
    if len(values) != 16:
        raise IngestionError(f"pose file {pose_path} holds {len(values)} numbers, expected 16")
    import numpy as np

    mat = np.array(values, dtype=np.float64).reshape(4, 4)
    rot = mat[:3, :3]
    deviation = rotation_deviation(rot)
    if deviation > 1e-3:
        warnings.warn(
            f"rotation block of {pose_path} deviates from orthonormal by {deviation:.2e}; "
            "projecting to the nearest quaternion",
            IngestionWarning,
        )
    return Pose(mat[:3, 3], matrix_to_quat(rot))


def _sequence_samples(scene_dir: Path, scene: str, seq: str) -> list[ImageSample]:
    seq_dir = scene_dir / seq
    if not seq_dir.is_dir():
        raise IngestionError(f"missing sequence directory {seq_dir}")
    samples = []
    for color_path in sorted(seq_dir.glob("frame-*.color.png")):
        frame_index = int(color_path.name.split("-")[1].split(".")[0])
        pose_path = seq_dir / f"frame-{frame_index:06d}.pose.txt"
        if not pose_path.is_file():
            raise IngestionError(f"frame {color_path.name} in {seq_dir} has no pose file")
        samples.append(
            ImageSample(
                pose=_parse_pose_file(pose_path),
                scene_id=scene,
                sequence_id=seq,
                frame_index=frame_index,
                image_path=color_path,
            )
        )
    if not samples:
        raise IngestionError(f"sequence directory {seq_dir} holds no frames")
    return samples


def load_seven_scenes(root_path, scene: str, split: str, image_size: int = 128) -> SceneDataset:
    """Ingest one scene split; the pose normalizer is always fitted on train."""
    scene_dir = Path(root_path) / scene
    samples = []
    for seq in _split_sequences(scene_dir, split):
        samples.extend(_sequence_samples(scene_dir, scene, seq))
    if split == "train":
        train_poses = [s.pose for s in samples]
    else:
        train_poses = []
        for seq in _split_sequences(scene_dir, "train"):
            seq_dir = scene_dir / seq
            train_poses.extend(_parse_pose_file(p) for p in sorted(seq_dir.glob("frame-*.pose.txt")))
    return SceneDataset(
        samples=samples,
        split=split,
        scene_id=scene,
        image_size=image_size,
        normalizer=fit_pose_normalizer(train_poses),
    )
