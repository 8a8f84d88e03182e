"""Bias-corrected Adam, written against explicit moment state."""

from __future__ import annotations

import torch


def adam_update(
    param: torch.Tensor,
    grad: torch.Tensor,
    moments: tuple[torch.Tensor, torch.Tensor],
    step: int,
    lr: float,
    b1: float,
    b2: float,
    eps: float = 1e-8,
) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]:
    """One Adam step; returns the new parameter and updated (m, v).

    step is 1-based (`step=1` for the first update after zero moments).
    """
    m, v = moments
    if param.shape != grad.shape or param.shape != m.shape or param.shape != v.shape:
        raise ValueError(
            f"shape mismatch: param {tuple(param.shape)}, grad {tuple(grad.shape)}, "
            f"m {tuple(m.shape)}, v {tuple(v.shape)}"
        )
    m = b1 * m + (1.0 - b1) * grad
    v = b2 * v + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1**step)
    v_hat = v / (1.0 - b2**step)
    return param - lr * m_hat / (v_hat.sqrt() + eps), (m, v)


class Adam:
    """Adam over one network's named parameters with persistent moments."""

    def __init__(self, named_params: dict[str, torch.Tensor], lr: float, b1: float, b2: float, eps: float = 1e-8):
        self.params = dict(named_params)
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.step_count = 0
        self.m = {name: torch.zeros_like(p) for name, p in self.params.items()}
        self.v = {name: torch.zeros_like(p) for name, p in self.params.items()}

    def update(self, grads: dict[str, torch.Tensor]) -> None:
        self.step_count += 1
        with torch.no_grad():
            for name, p in self.params.items():
                new_p, (self.m[name], self.v[name]) = adam_update(
                    p, grads[name], (self.m[name], self.v[name]), self.step_count, self.lr, self.b1, self.b2, self.eps
                )
                p.copy_(new_p)

    def state_arrays(self, prefix: str) -> dict[str, torch.Tensor]:
        out = {}
        for name in self.params:
            out[f"{prefix}/{name}.m"] = self.m[name]
            out[f"{prefix}/{name}.v"] = self.v[name]
        return out

    def load_state_arrays(self, prefix: str, arrays, step_count: int) -> None:
        self.step_count = step_count
        with torch.no_grad():
            for name in self.params:
                self.m[name].copy_(torch.as_tensor(arrays[f"{prefix}/{name}.m"]))
                self.v[name].copy_(torch.as_tensor(arrays[f"{prefix}/{name}.v"]))
