"""Discriminator: downsampling trunk, realness head, linear pose head."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .layers import SpectralConv2d, SpectralLinear


class DBlock(nn.Module):
    """Pre-activation residual block with mean-pool downsampling."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv1 = SpectralConv2d(in_channels, out_channels, 3, padding=1)
        self.conv2 = SpectralConv2d(out_channels, out_channels, 3, padding=1)
        self.shortcut = SpectralConv2d(in_channels, out_channels, 1)

    def forward(self, x):
        h = F.relu(x)
        h = self.conv1(h)
        h = F.relu(h)
        h = self.conv2(h)
        h = F.avg_pool2d(h, 2)
        shortcut = F.avg_pool2d(self.shortcut(x), 2)
        return h + shortcut


class Discriminator(nn.Module):
    """Trunk to a sum-pooled feature vector, then realness and pose heads."""

    def __init__(self, config):
        super().__init__()
        self.config = config
        n = config.n_blocks
        channels = [config.d_final_channels // 2 ** (n - 1 - i) for i in range(n)]
        ins = [3] + channels[:-1]
        self.blocks = nn.ModuleList(DBlock(ins[i], channels[i]) for i in range(n))
        self.realness_head = SpectralLinear(config.d_final_channels, 1)
        self.pose_head = SpectralLinear(config.d_final_channels, config.pose_dim)

    def features(self, images: torch.Tensor) -> torch.Tensor:
        if images.ndim != 4 or images.shape[2] != self.config.image_size or images.shape[3] != self.config.image_size:
            raise ValueError(
                f"expected (B, 3, {self.config.image_size}, {self.config.image_size}) images, "
                f"got {tuple(images.shape)}"
            )
        h = images
        for block in self.blocks:
            h = block(h)
        return F.relu(h).sum(dim=(2, 3))

    def realness(self, features: torch.Tensor) -> torch.Tensor:
        return self.realness_head(features).squeeze(-1)

    def pose(self, features: torch.Tensor) -> torch.Tensor:
        return self.pose_head(features)

    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        f = self.features(images)
        return self.realness(f), self.pose(f)
