"""Spectrally-normalized layers and batch normalization variants.

Every layer understands three statistics regimes:
  - training: one power-iteration step per forward (persistent u advances),
    batch-norm uses batch statistics and updates running averages,
  - eval: power iteration run to convergence without touching state,
    batch-norm uses frozen running statistics,
  - frozen_stats: the layer is a fixed differentiable function of its
    parameters and inputs (stored u reused as-is, batch statistics without
    buffer updates) — the regime gradient checks need.
"""

from __future__ import annotations

from contextlib import contextmanager

import torch
import torch.nn.functional as F
from torch import nn

from .spectral import spectral_normalize

TRAIN_POWER_ITERATIONS = 1
EVAL_POWER_ITERATIONS = 50
BN_MOMENTUM = 0.99  # retention factor for running statistics


class _SpectralWeightMixin:
    frozen_stats: bool

    def _init_spectral(self, out_dim: int):
        self.frozen_stats = False
        u = torch.zeros(out_dim)
        u[0] = 1.0  # placeholder unit vector; init_params replaces it with a random one
        self.register_buffer("sn_u", u)

    def normalized_weight(self) -> torch.Tensor:
        w2d = self.weight.reshape(self.weight.shape[0], -1)
        if self.frozen_stats:
            w_bar, _ = spectral_normalize(w2d, self.sn_u, n_iter=0)
        elif self.training:
            w_bar, new_u = spectral_normalize(w2d, self.sn_u, n_iter=TRAIN_POWER_ITERATIONS)
            with torch.no_grad():
                self.sn_u.copy_(new_u)
        else:
            w_bar, _ = spectral_normalize(w2d, self.sn_u, n_iter=EVAL_POWER_ITERATIONS)
        return w_bar.reshape(self.weight.shape)


class SpectralLinear(nn.Module, _SpectralWeightMixin):
    def __init__(self, in_features: int, out_features: int, bias: bool = True):
        super().__init__()
        self.weight = nn.Parameter(torch.zeros(out_features, in_features))
        self.bias = nn.Parameter(torch.zeros(out_features)) if bias else None
        self._init_spectral(out_features)

    def forward(self, x):
        return F.linear(x, self.normalized_weight(), self.bias)


class SpectralConv2d(nn.Module, _SpectralWeightMixin):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, padding: int = 0, bias: bool = True):
        super().__init__()
        self.padding = padding
        self.weight = nn.Parameter(torch.zeros(out_channels, in_channels, kernel_size, kernel_size))
        self.bias = nn.Parameter(torch.zeros(out_channels)) if bias else None
        self._init_spectral(out_channels)

    def forward(self, x):
        return F.conv2d(x, self.normalized_weight(), self.bias, padding=self.padding)


class _BatchNormBase(nn.Module):
    def __init__(self, num_features: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.frozen_stats = False
        self.register_buffer("running_mean", torch.zeros(num_features))
        self.register_buffer("running_var", torch.ones(num_features))

    def _normalize(self, x):
        if self.frozen_stats:
            return F.batch_norm(x, None, None, training=True, eps=self.eps)
        if self.training:
            return F.batch_norm(
                x, self.running_mean, self.running_var, training=True, momentum=1.0 - BN_MOMENTUM, eps=self.eps
            )
        return F.batch_norm(x, self.running_mean, self.running_var, training=False, eps=self.eps)


class BatchNorm2d(_BatchNormBase):
    """Plain batch norm with learnable scale (init 1) and shift (init 0)."""

    def __init__(self, num_features: int, eps: float = 1e-5):
        super().__init__(num_features, eps)
        self.gain = nn.Parameter(torch.ones(num_features))
        self.shift = nn.Parameter(torch.zeros(num_features))

    def forward(self, x):
        h = self._normalize(x)
        return h * self.gain[None, :, None, None] + self.shift[None, :, None, None]


class ConditionalBatchNorm2d(_BatchNormBase):
    """Batch norm whose scale/shift are affine in the pose embedding.

    The scale is 1 + W_g e around a unit base so the layer starts near an
    unconditional batch norm.
    """

    def __init__(self, num_features: int, embed_dim: int, eps: float = 1e-5):
        super().__init__(num_features, eps)
        self.gain_proj = SpectralLinear(embed_dim, num_features, bias=False)
        self.shift_proj = SpectralLinear(embed_dim, num_features, bias=False)
        self.base_gain = nn.Parameter(torch.ones(num_features))
        self.base_shift = nn.Parameter(torch.zeros(num_features))

    def forward(self, x, embedding):
        h = self._normalize(x)
        gain = self.base_gain[None, :] + self.gain_proj(embedding)
        shift = self.base_shift[None, :] + self.shift_proj(embedding)
        return h * gain[:, :, None, None] + shift[:, :, None, None]


def _stat_modules(module: nn.Module):
    for m in module.modules():
        if hasattr(m, "frozen_stats"):
            yield m


@contextmanager
def frozen_stats(*modules: nn.Module):
    """Make networks fixed differentiable functions of (parameters, inputs).

    Inside the context, spectral normalization reuses its stored estimate and
    batch norm uses batch statistics; no buffer is written. Required for
    finite-difference comparisons, where the function must not drift between
    evaluations.
    """
    touched = [m for module in modules for m in _stat_modules(module)]
    previous = [m.frozen_stats for m in touched]
    for m in touched:
        m.frozen_stats = True
    try:
        yield
    finally:
        for m, prev in zip(touched, previous):
            m.frozen_stats = prev
