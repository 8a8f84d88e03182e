"""View synthesis at arbitrary poses, route rendering, frame interpolation, export."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .checkpoint import LoadedCheckpoint, load_model_checkpoint
from .geometry import Pose, Route, pose_lerp, route_poses
from .model import generator_forward

OUT_OF_VOLUME_LIMIT = 3.0  # in normalized position units


@dataclass(frozen=True)
class SynthesizedView:
    image: np.ndarray  # HxWx3 in [-1, 1]
    pose: Pose
    out_of_volume: bool  # pose lies far outside the training volume (warning, not an error)


def _as_checkpoint(checkpoint) -> LoadedCheckpoint:
    if isinstance(checkpoint, LoadedCheckpoint):
        return checkpoint
    return load_model_checkpoint(checkpoint)


def synthesize_view(checkpoint, pose: Pose) -> SynthesizedView:
    """Render the generator's view at a pose; deterministic in eval mode.

    Poses far from the training volume still render (virtual routes go there
    on purpose) but the result carries a warning flag.
    """
    ck = _as_checkpoint(checkpoint)
    vec = ck.normalizer.pose_to_vector(pose)
    flagged = bool(np.abs(vec[:3]).max() > OUT_OF_VOLUME_LIMIT)
    image = generator_forward(ck.generator, vec)
    return SynthesizedView(image=image, pose=pose, out_of_volume=flagged)


def synthesize_route(checkpoint, route: Route) -> list[SynthesizedView]:
    """Render every pose of a route, order preserved."""
    ck = _as_checkpoint(checkpoint)
    return [synthesize_view(ck, pose) for pose in route_poses(route)]


def interpolate_frames(checkpoint, start: Pose, end: Pose, n_insert: int) -> list[SynthesizedView]:
    """n_insert synthesized frames between two poses, plus the two endpoints.

    Frame i sits at pose_lerp(start, end, i / (n_insert + 1)), so the pose
    sequence is exactly uniform and the endpoint frames match single-view
    synthesis bit for bit.
    """
    if n_insert < 1:
        raise ValueError("n_insert must be at least 1")
    ck = _as_checkpoint(checkpoint)
    steps = n_insert + 1
    return [synthesize_view(ck, pose_lerp(start, end, i / steps)) for i in range(steps + 1)]


def image_to_bytes(image: np.ndarray) -> np.ndarray:
    """[-1, 1] floats -> uint8 with rounding."""
    return np.clip(np.rint((np.asarray(image, dtype=np.float64) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def bytes_to_image(data: np.ndarray) -> np.ndarray:
    return (np.asarray(data, dtype=np.float32) / 127.5) - 1.0


def export_sequence(images, out_dir, side_by_side_with=None) -> list[Path]:
    """Write numbered 8-bit PNG frames; optionally stack originals above them.

    In comparison mode frame k is `side_by_side_with[k]` on top of images[k],
    doubling the frame height.
    """
    images = list(images)
    if not images:
        raise ValueError("no frames to export")
    if side_by_side_with is not None:
        side_by_side_with = list(side_by_side_with)
        if len(side_by_side_with) != len(images):
            raise ValueError(
                f"comparison list has {len(side_by_side_with)} frames, expected {len(images)}"
            )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(images, start=1):
        data = image_to_bytes(frame)
        if side_by_side_with is not None:
            data = np.vstack([image_to_bytes(side_by_side_with[i - 1]), data])
        path = out_dir / f"frame_{i:06d}.png"
        try:
            Image.fromarray(data).save(path)
        except OSError as exc:
            raise OSError(f"cannot write frame {path}: {exc}") from exc
        paths.append(path)
    return paths
