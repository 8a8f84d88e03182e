"""Model construction, deterministic initialization and numpy-facing wrappers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..geometry import POSE_DIM
from .discriminator import DBlock, Discriminator
from .generator import Generator, GBlock
from .layers import (
    BatchNorm2d,
    ConditionalBatchNorm2d,
    SpectralConv2d,
    SpectralLinear,
    frozen_stats,
)
from .spectral import spectral_normalize


class ModelConfigError(ValueError):
    """Inconsistent architecture configuration."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes; the default is the 128x128 five-block setup."""

    image_size: int = 128
    n_blocks: int = 5
    g_seed_channels: int = 256
    d_final_channels: int = 512
    pose_embed_dim: int = 256
    pose_dim: int = POSE_DIM

    def __post_init__(self):
        if self.image_size != 4 * 2**self.n_blocks:
            raise ModelConfigError(
                f"image_size {self.image_size} incompatible with {self.n_blocks} blocks "
                f"(needs {4 * 2 ** self.n_blocks})"
            )
        if self.g_seed_channels % 2**self.n_blocks != 0:
            raise ModelConfigError("g_seed_channels must be divisible by 2**n_blocks")
        if self.d_final_channels % 2 ** (self.n_blocks - 1) != 0:
            raise ModelConfigError("d_final_channels must be divisible by 2**(n_blocks-1)")

    @staticmethod
    def desk() -> "ModelConfig":
        """Quarter-width three-block setup for 32x32 desk-scale runs."""
        return ModelConfig(image_size=32, n_blocks=3, g_seed_channels=64, d_final_channels=128, pose_embed_dim=64)

    @staticmethod
    def for_image_size(image_size: int) -> "ModelConfig":
        """Architecture for a resolution: one block per doubling above 4px,
        widths scaled relative to the 128px five-block baseline."""
        n_blocks = int(round(np.log2(image_size / 4)))
        if n_blocks < 1 or 4 * 2**n_blocks != image_size:
            raise ModelConfigError(f"image_size must be 4*2^k for k >= 1, got {image_size}")

        def scaled(base: int) -> int:
            return base * 2 ** (n_blocks - 5) if n_blocks >= 5 else base // 2 ** (5 - n_blocks)

        return ModelConfig(
            image_size=image_size,
            n_blocks=n_blocks,
            g_seed_channels=scaled(256),
            d_final_channels=scaled(512),
            pose_embed_dim=scaled(256),
        )


def _orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))[None, :]
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(q[:rows, :cols])


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def init_params(
    config: ModelConfig, seed: int, dtype: torch.dtype = torch.float32
) -> tuple[Generator, Discriminator]:
    """Build both networks with seeded orthogonal weights.

    Conv/affine weights are orthogonal (rows or columns, whichever fit),
    biases zero, normalization base scales one, spectral estimates random
    unit vectors. Identical seeds give bit-identical parameters.
    """
    rng = np.random.default_rng([seed, 17])
    generator = Generator(config)
    discriminator = Discriminator(config)
    for net in (generator, discriminator):
        for module in net.modules():
            if isinstance(module, (SpectralLinear, SpectralConv2d)):
                shape = module.weight.shape
                w2d = _orthogonal(rng, shape[0], int(np.prod(shape[1:])))
                with torch.no_grad():
                    module.weight.copy_(torch.from_numpy(w2d.reshape(shape)))
                    module.sn_u.copy_(torch.from_numpy(_unit(rng, shape[0])))
        net.to(dtype)
    return generator, discriminator


# ---------------------------------------------------------------------------
# numpy-facing wrappers (deterministic eval-mode forward passes)


def images_to_tensor(images: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """HxWx3 (or BxHxWx3) numpy image(s) -> (B, 3, H, W) tensor."""
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[-1] != 3:
        raise ValueError(f"expected (B, H, W, 3) images, got shape {arr.shape}")
    return torch.as_tensor(arr.transpose(0, 3, 1, 2), dtype=dtype).contiguous()


def tensor_to_images(t: torch.Tensor) -> np.ndarray:
    """(B, 3, H, W) tensor -> (B, H, W, 3) float32 numpy."""
    return t.detach().cpu().numpy().transpose(0, 2, 3, 1).astype(np.float32)


def _model_dtype(net: torch.nn.Module) -> torch.dtype:
    return next(net.parameters()).dtype


def generator_forward(generator: Generator, pose_vectors: np.ndarray) -> np.ndarray:
    """Synthesize image(s) for normalized pose vector(s); eval mode, deterministic."""
    vecs = np.atleast_2d(np.asarray(pose_vectors, dtype=np.float64))
    single = np.asarray(pose_vectors).ndim == 1
    generator.eval()
    with torch.no_grad():
        out = generator(torch.as_tensor(vecs, dtype=_model_dtype(generator)))
    images = tensor_to_images(out)
    return images[0] if single else images


def discriminator_features(discriminator: Discriminator, images: np.ndarray) -> np.ndarray:
    """Sum-pooled trunk feature vector(s) for [-1, 1] image(s)."""
    single = np.asarray(images).ndim == 3
    discriminator.eval()
    with torch.no_grad():
        f = discriminator.features(images_to_tensor(images, _model_dtype(discriminator)))
    f = f.cpu().numpy()
    return f[0] if single else f


def realness_score(discriminator: Discriminator, features: np.ndarray) -> np.ndarray:
    """Affine realness score of feature vector(s)."""
    feats = np.atleast_2d(np.asarray(features))
    single = np.asarray(features).ndim == 1
    discriminator.eval()
    with torch.no_grad():
        s = discriminator.realness(torch.as_tensor(feats, dtype=_model_dtype(discriminator)))
    s = s.cpu().numpy()
    return float(s[0]) if single else s


def estimate_pose(discriminator: Discriminator, images: np.ndarray) -> np.ndarray:
    """Normalized 7-d pose estimate(s) for preprocessed eval image(s)."""
    single = np.asarray(images).ndim == 3
    discriminator.eval()
    with torch.no_grad():
        t = images_to_tensor(images, _model_dtype(discriminator))
        pose = discriminator.pose(discriminator.features(t))
    pose = pose.cpu().numpy().astype(np.float64)
    return pose[0] if single else pose


__all__ = [
    "BatchNorm2d",
    "ConditionalBatchNorm2d",
    "DBlock",
    "Discriminator",
    "GBlock",
    "Generator",
    "ModelConfig",
    "ModelConfigError",
    "SpectralConv2d",
    "SpectralLinear",
    "discriminator_features",
    "estimate_pose",
    "frozen_stats",
    "generator_forward",
    "images_to_tensor",
    "init_params",
    "realness_score",
    "spectral_normalize",
    "tensor_to_images",
]
