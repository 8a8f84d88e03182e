"""Pose-to-image translation: a conditional GAN whose generator renders camera
views from 6-DoF poses and whose discriminator doubles as a camera localizer."""

from .checkpoint import LoadedCheckpoint, load_model_checkpoint
from .evaluation import EvalReport, SaliencyMap, evaluate, grayscale_evaluate, median, saliency_map
from .geometry import (
    Pose,
    PoseNormalizer,
    Route,
    angular_error,
    fit_pose_normalizer,
    pose_lerp,
    pose_residual_norm,
    quat_canonicalize,
    route_poses,
)
from .gradcheck import gradcheck
from .model import ModelConfig, estimate_pose, generator_forward, init_params
from .objectives import BatchLosses, LossConfig
from .synthesis import SynthesizedView, export_sequence, interpolate_frames, synthesize_route, synthesize_view
from .trainer import DatasetSpec, TrainConfig, apply_ablation, run_training, train_step

__version__ = "0.1.0"

__all__ = [
    "BatchLosses",
    "DatasetSpec",
    "EvalReport",
    "LoadedCheckpoint",
    "LossConfig",
    "ModelConfig",
    "Pose",
    "PoseNormalizer",
    "Route",
    "SaliencyMap",
    "SynthesizedView",
    "TrainConfig",
    "angular_error",
    "apply_ablation",
    "estimate_pose",
    "evaluate",
    "export_sequence",
    "fit_pose_normalizer",
    "generator_forward",
    "gradcheck",
    "grayscale_evaluate",
    "init_params",
    "interpolate_frames",
    "load_model_checkpoint",
    "median",
    "pose_lerp",
    "pose_residual_norm",
    "quat_canonicalize",
    "route_poses",
    "run_training",
    "saliency_map",
    "synthesize_route",
    "synthesize_view",
    "train_step",
]
