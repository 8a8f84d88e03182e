"""Pose-accuracy evaluation, grayscale robustness and input-saliency maps."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import LoadedCheckpoint, load_model_checkpoint
from .data import SceneDataset
from .data.core import ImageSample
from .geometry import angular_error, quat_canonicalize
from .model import images_to_tensor
from .objectives import pose_residual_batch

_EVAL_CHUNK = 64


@dataclass(frozen=True)
class EvalReport:
    """Per-sample translation/rotation errors and their medians."""

    per_sample: list[tuple[str, float, float]]
    median_translation: float
    median_rotation: float


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray  # HxW in [0, 1]
    source_sample: str


def median(values) -> float:
    """True median: middle element, or mean of the middle two for even length."""
    return float(np.median(np.asarray(values, dtype=np.float64)))


def sample_id(sample: ImageSample) -> str:
    return f"{sample.sequence_id}/{sample.frame_index:06d}"


def _as_checkpoint(checkpoint) -> LoadedCheckpoint:
    if isinstance(checkpoint, LoadedCheckpoint):
        return checkpoint
    return load_model_checkpoint(checkpoint)


def evaluate(checkpoint, dataset: SceneDataset) -> EvalReport:
    """Median position/orientation errors of the pose head over a dataset.

    Each sample is center-crop preprocessed, regressed, denormalized and
    compared against its true pose (Euclidean meters, quaternion degrees).
    """
    ck = _as_checkpoint(checkpoint)
    if ck.image_size != dataset.image_size:
        raise ValueError(
            f"checkpoint renders {ck.image_size}px but dataset is configured for {dataset.image_size}px"
        )
    per_sample = []
    for lo in range(0, len(dataset), _EVAL_CHUNK):
        indices = range(lo, min(lo + _EVAL_CHUNK, len(dataset)))
        images = np.stack([dataset.load_pixels(i, mode="eval") for i in indices])
        with torch.no_grad():
            t = images_to_tensor(images)
            vecs = ck.discriminator.pose(ck.discriminator.features(t)).numpy().astype(np.float64)
        for row, i in zip(vecs, indices):
            sample = dataset.samples[i]
            position = ck.normalizer.denormalize_position(row[:3])
            quat = quat_canonicalize(row[3:])
            per_sample.append(
                (
                    sample_id(sample),
                    float(np.linalg.norm(position - sample.pose.position)),
                    angular_error(quat, sample.pose.orientation),
                )
            )
    return EvalReport(
        per_sample=per_sample,
        median_translation=median([r[1] for r in per_sample]),
        median_rotation=median([r[2] for r in per_sample]),
    )


def grayscale_evaluate(checkpoint, dataset: SceneDataset) -> tuple[EvalReport, tuple[float, float]]:
    """Evaluate on grayscale inputs; delta is (grayscale - color) medians."""
    ck = _as_checkpoint(checkpoint)
    color = evaluate(ck, dataset)
    gray = evaluate(ck, dataset.as_grayscale())
    delta = (gray.median_translation - color.median_translation, gray.median_rotation - color.median_rotation)
    return gray, delta


def saliency_map(checkpoint, sample: ImageSample, pixels: np.ndarray | None = None) -> SaliencyMap:
    """Gradient magnitude of the pose residual w.r.t. input pixels.

    Per pixel: max over channels of the absolute gradient, normalized by the
    map's maximum (an all-zero map stays zero).
    """
    ck = _as_checkpoint(checkpoint)
    if pixels is None:
        pixels = sample.pixels
    if pixels is None:
        raise ValueError("sample has no materialized pixels; pass them explicitly")
    y = torch.as_tensor(
        ck.normalizer.pose_to_vector(sample.pose)[None], dtype=next(ck.discriminator.parameters()).dtype
    )
    x = images_to_tensor(pixels, dtype=y.dtype).requires_grad_(True)
    estimate = ck.discriminator.pose(ck.discriminator.features(x))
    loss = pose_residual_batch(estimate, y).sum()
    (grad,) = torch.autograd.grad(loss, x)
    values = grad[0].abs().amax(dim=0).numpy()
    peak = values.max()
    if peak > 0:
        values = values / peak
    return SaliencyMap(values=values.astype(np.float64), source_sample=sample_id(sample))


def write_report(report: EvalReport, path) -> Path:
    """Tab-separated per-sample rows plus a final median row."""
    path = Path(path)
    lines = ["sample_id\ttranslation_m\trotation_deg"]
    lines.extend(f"{sid}\t{t!r}\t{r!r}" for sid, t, r in report.per_sample)
    lines.append(f"median\t{report.median_translation!r}\t{report.median_rotation!r}")
    path.write_text("\n".join(lines) + "\n")
    return path
