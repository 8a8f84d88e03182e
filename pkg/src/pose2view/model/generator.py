"""Pose-conditioned image generator: embedding, seed map, residual upsampling blocks."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .layers import BatchNorm2d, ConditionalBatchNorm2d, SpectralConv2d, SpectralLinear

SEED_SIZE = 4  # spatial size of the seed feature map


class GBlock(nn.Module):
    """Residual block: condition, upsample x2, halve channels."""

    def __init__(self, in_channels: int, out_channels: int, embed_dim: int):
        super().__init__()
        self.bn1 = ConditionalBatchNorm2d(in_channels, embed_dim)
        self.conv1 = SpectralConv2d(in_channels, out_channels, 3, padding=1)
        self.bn2 = ConditionalBatchNorm2d(out_channels, embed_dim)
        self.conv2 = SpectralConv2d(out_channels, out_channels, 3, padding=1)
        self.shortcut = SpectralConv2d(in_channels, out_channels, 1) if in_channels != out_channels else None

    def forward(self, x, embedding):
        h = F.relu(self.bn1(x, embedding))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.conv1(h)
        h = F.relu(self.bn2(h, embedding))
        h = self.conv2(h)
        shortcut = F.interpolate(x, scale_factor=2, mode="nearest")
        if self.shortcut is not None:
            shortcut = self.shortcut(shortcut)
        return h + shortcut


class Generator(nn.Module):
    """Maps a normalized 7-d pose vector to an image in [-1, 1].

    The pose embedding drives both the 4x4 seed feature map and the
    per-block conditional scale/shift, so conditioning acts at every scale.
    Channels halve and spatial size doubles per block.
    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        channels = [config.g_seed_channels // 2**i for i in range(config.n_blocks + 1)]
        self.pose_embed = SpectralLinear(config.pose_dim, config.pose_embed_dim)
        self.seed_map = SpectralLinear(config.pose_embed_dim, channels[0] * SEED_SIZE * SEED_SIZE)
        self.blocks = nn.ModuleList(
            GBlock(channels[i], channels[i + 1], config.pose_embed_dim) for i in range(config.n_blocks)
        )
        self.out_norm = BatchNorm2d(channels[-1])
        self.out_conv = SpectralConv2d(channels[-1], 3, 3, padding=1)

    def forward(self, pose_vectors: torch.Tensor) -> torch.Tensor:
        if pose_vectors.ndim != 2 or pose_vectors.shape[1] != self.config.pose_dim:
            raise ValueError(f"expected (B, {self.config.pose_dim}) pose vectors, got {tuple(pose_vectors.shape)}")
        embedding = self.pose_embed(pose_vectors)
        h = self.seed_map(embedding).reshape(-1, self.config.g_seed_channels, SEED_SIZE, SEED_SIZE)
        for block in self.blocks:
            h = block(h, embedding)
        h = F.relu(self.out_norm(h))
        return torch.tanh(self.out_conv(h))
