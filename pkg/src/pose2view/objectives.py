"""Loss terms for adversarial training, exposed in minimization form.

The discriminator objective combines a hinge realness term with a pose
distance term; generated samples are constrained to lie within an (optionally
adaptive) margin around the discriminator's own estimate for the paired real
image. The generator combines adversarial score, pose residual and per-pixel
reconstruction terms. All functions are pure and differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .geometry import POSE_DIM

GAMMA_MODES = ("adaptive", "constant", "off")


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.1
    beta1: float = 0.5
    beta2: float = 10.0
    k: float = 0.1
    gamma_mode: str = "adaptive"
    gamma_const: float = 0.01
    orientation_weight: float = 1.0
    adversarial: bool = True  # on False the discriminator trains as a pure pose regressor

    def __post_init__(self):
        for name in ("alpha", "beta1", "beta2", "k"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.gamma_mode not in GAMMA_MODES:
            raise ValueError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
        if self.gamma_mode == "constant" and not self.gamma_const > 0:
            raise ValueError("gamma_const must be positive in constant mode")


@dataclass(frozen=True)
class BatchLosses:
    """Per-step loss record (already reduced to floats for logging)."""

    d_adv: float
    d_pose: float
    d_total: float
    g_adv: float
    g_pose: float
    g_pixel: float
    g_total: float

    FIELDS = ("d_adv", "d_pose", "d_total", "g_adv", "g_pose", "g_pixel", "g_total")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


def pose_residual_batch(a: torch.Tensor, b: torch.Tensor, orientation_weight: float = 1.0) -> torch.Tensor:
    """Per-sample pose distance for (B, 7) batches; mirrors geometry.pose_residual_norm."""
    if a.shape != b.shape or a.shape[-1] != POSE_DIM:
        raise ValueError(f"misaligned pose batches: {tuple(a.shape)} vs {tuple(b.shape)}")
    diff = (a - b).abs()
    return diff[..., :3].sum(-1) + orientation_weight * diff[..., 3:].sum(-1)


def d_adv_hinge(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """Hinge realness loss, negated for a minimizing optimizer.

    Zero exactly when every real score >= 1 and every fake score <= -1.
    """
    real_scores = torch.as_tensor(real_scores)
    fake_scores = torch.as_tensor(fake_scores)
    if real_scores.numel() == 0 or fake_scores.numel() == 0:
        raise ValueError("hinge loss needs non-empty score batches")
    real_term = torch.clamp(real_scores - 1.0, max=0.0).mean()
    fake_term = torch.clamp(-fake_scores - 1.0, max=0.0).mean()
    return -(real_term + fake_term)


def gamma_value(pose_residuals_real: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    """Per-sample pose margin; a constant w.r.t. differentiation.

    Adaptive mode shrinks the margin proportionally to the discriminator's own
    residual on the paired real image.
    """
    residuals = torch.as_tensor(pose_residuals_real)
    if torch.any(residuals < 0):
        raise ValueError("pose residuals must be non-negative")
    if cfg.gamma_mode == "adaptive":
        return cfg.k * residuals.detach()
    if cfg.gamma_mode == "constant":
        return torch.full_like(residuals, cfg.gamma_const)
    raise ValueError("gamma is undefined when gamma_mode is 'off'")


def d_pose_loss(
    F_real: torch.Tensor,
    F_fake: torch.Tensor | None,
    y: torch.Tensor,
    cfg: LossConfig,
    gamma_override: torch.Tensor | None = None,
) -> torch.Tensor:
    """Pose term of the discriminator objective.

    Mean residual between estimates on real images and their true poses, plus
    the margin-hinged residual between estimates on generated and real images
    of the same pose. The second term is dropped entirely when gamma_mode is
    'off'. Batches are index-aligned: F_fake[i] comes from the generated image
    at pose y[i] and F_real[i] from the real image at that pose.

    gamma_override pins the margin to externally computed values; finite
    difference checks need it because the adaptive margin is a stop-gradient
    quantity that must not drift with the perturbed parameters.
    """
    residual_real = pose_residual_batch(F_real, y, cfg.orientation_weight)
    loss = residual_real.mean()
    if cfg.gamma_mode == "off":
        return loss
    if F_fake is None:
        raise ValueError("F_fake is required unless gamma_mode is 'off'")
    gamma = gamma_value(residual_real, cfg) if gamma_override is None else gamma_override.detach()
    residual_fake = pose_residual_batch(F_fake, F_real, cfg.orientation_weight)
    return loss + torch.clamp(residual_fake - gamma, min=0.0).mean()


def d_total(d_adv: torch.Tensor, d_pose: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    """Discriminator objective; without the adversarial term it is a pure regressor."""
    if not cfg.adversarial:
        return cfg.alpha * d_pose
    return d_adv + cfg.alpha * d_pose


def g_loss(
    fake_scores: torch.Tensor,
    F_fake: torch.Tensor,
    y: torch.Tensor,
    fake_images: torch.Tensor,
    real_images: torch.Tensor,
    cfg: LossConfig,
) -> dict[str, torch.Tensor]:
    """Generator objective terms: adversarial, pose residual, pixel L1.

    real_images[i] is the dataset image at pose y[i].
    """
    if fake_images.shape != real_images.shape:
        raise ValueError(f"misaligned image batches: {tuple(fake_images.shape)} vs {tuple(real_images.shape)}")
    if fake_scores.shape[0] != y.shape[0] or fake_images.shape[0] != y.shape[0]:
        raise ValueError("batch size mismatch across generator loss inputs")
    g_adv = -torch.as_tensor(fake_scores).mean()
    g_pose = pose_residual_batch(F_fake, y, cfg.orientation_weight).mean()
    g_pixel = (fake_images - real_images).abs().mean()
    return {
        "g_adv": g_adv,
        "g_pose": g_pose,
        "g_pixel": g_pixel,
        "g_total": g_adv + cfg.beta1 * g_pose + cfg.beta2 * g_pixel,
    }
