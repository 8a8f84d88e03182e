"""Dataset container types shared by all loaders."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..geometry import Pose, PoseNormalizer
from .preprocess import load_raw_image, preprocess, to_grayscale_pixels


class IngestionError(ValueError):
    """Raised when an on-disk dataset does not match its published layout."""


class IngestionWarning(UserWarning):
    """Recoverable dataset oddity (e.g. slightly non-orthonormal rotation)."""


@dataclass
class ImageSample:
    """One camera shot: pose plus either final pixels or a lazy disk source.

    `pixels`, when present, are float32 HxWx3 in [-1, 1] at the dataset's
    configured size. Disk-backed samples keep `image_path` instead and are
    preprocessed on access.
    """

    pose: Pose
    scene_id: str
    sequence_id: str
    frame_index: int
    pixels: np.ndarray | None = None
    image_path: Path | None = None


def to_grayscale(sample: ImageSample) -> ImageSample:
    """Rec. 601 luma replicated over all three channels; metadata unchanged."""
    if sample.pixels is None:
        raise ValueError("to_grayscale needs materialized pixels; use SceneDataset.as_grayscale for lazy datasets")
    return replace(sample, pixels=to_grayscale_pixels(sample.pixels))


@dataclass
class SceneDataset:
    """Ordered samples of one scene plus the train-split pose normalizer."""

    samples: list[ImageSample]
    split: str
    scene_id: str
    image_size: int
    normalizer: PoseNormalizer
    grayscale: bool = False

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")
        if not self.samples:
            raise IngestionError(f"dataset for scene {self.scene_id!r} is empty")
        for s in self.samples:
            if s.scene_id != self.scene_id:
                raise ValueError("all samples must share the dataset scene_id")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def poses(self) -> list[Pose]:
        return [s.pose for s in self.samples]

    def load_pixels(self, index: int, mode: str = "eval", rng_seed: int | None = None) -> np.ndarray:
        """Final [-1, 1] pixels for one sample, preprocessing lazily if needed."""
        sample = self.samples[index]
        if sample.pixels is not None:
            img = sample.pixels
        else:
            raw = load_raw_image(sample.image_path)
            img = preprocess(raw, mode=mode, rng_seed=rng_seed, image_size=self.image_size)
        if self.grayscale:
            img = to_grayscale_pixels(img)
        return img

    def as_grayscale(self) -> "SceneDataset":
        return replace(self, grayscale=True)

    def batch(self, indices, mode: str = "train", seed: int | None = None):
        """Stack images and normalized 7-d pose vectors for the given indices.

        With a seed, per-sample crop randomness is derived from
        (seed, position-in-batch) so multi-worker prefetch stays reproducible.
        """
        images = []
        for k, i in enumerate(indices):
            sub = None if seed is None else int(np.random.default_rng([seed, k]).integers(0, 2**31 - 1))
            images.append(self.load_pixels(int(i), mode=mode, rng_seed=sub))
        poses = np.stack([self.normalizer.pose_to_vector(self.samples[int(i)].pose) for i in indices])
        return np.stack(images), poses.astype(np.float32)
