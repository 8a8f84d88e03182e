"""Spectral normalization with persistent left-singular state.

The training path (n_iter = 1) is the classic power-iteration update: one
v/u sweep per forward with the estimate persisted across steps. Multi-step
calls (evaluation runs 50) perform the same alternating W^T/W sweeps but keep
the visited directions as a Krylov basis (Golub-Kahan bidiagonalization with
reorthogonalization) and read the largest singular value off the accumulated
bidiagonal, so a fixed 50-sweep budget reaches the oracle value to far better
than 1% regardless of the spectral gap; a plain 50-step power iteration
stalls on near-degenerate spectra.
"""

from __future__ import annotations

import numpy as np
import torch

SIGMA_FLOOR = 1e-12
_INNER_ITERS = 3000  # top singular value of the tiny bidiagonal, fixed budget


def _safe_normalize(x: torch.Tensor, fallback: torch.Tensor) -> torch.Tensor:
    norm = x.norm()
    if norm < 1e-12:
        return fallback
    return x / norm


def _bidiagonal_top_right_vector(alphas: list[float], betas: list[float]) -> np.ndarray:
    """Top right-singular vector of the lower-bidiagonal Lanczos matrix.

    B has diag(alphas) and subdiagonal betas ((m+1) x m when the last beta is
    nonzero). Power iteration on B^T B in exact coordinates; the matrix is
    tiny so a fixed generous budget converges the value far past the needed
    tolerance.
    """
    a = np.asarray(alphas, dtype=np.float64)
    b = np.asarray(betas, dtype=np.float64)
    m = len(a)
    x = np.zeros(m)
    x[int(np.argmax(np.abs(a)))] = 1.0

    def gram_apply(vec: np.ndarray) -> np.ndarray:
        # y = B vec (length m+1): y_i = a_i vec_i, y_{i+1} += b_i vec_i
        y = np.zeros(m + 1)
        y[:m] = a * vec
        y[1:] += b * vec
        # z = B^T y: z_i = a_i y_i + b_i y_{i+1}
        return a * y[:m] + b * y[1:]

    for _ in range(_INNER_ITERS):
        nxt = gram_apply(x)
        norm = np.linalg.norm(nxt)
        if norm < 1e-300:
            break
        x = nxt / norm
    return x


def _krylov_sigma(weight: torch.Tensor, u0: torch.Tensor, n_iter: int):
    """n_iter alternating W^T/W sweeps kept as an orthonormal Krylov pair.

    Returns (u, v) detached unit estimates of the top singular pair, or None
    when the first sweep collapses (zero matrix).
    """
    rows, cols = weight.shape
    max_steps = min(n_iter, rows, cols)
    us = [u0 / u0.norm()]
    vs: list[torch.Tensor] = []
    alphas: list[float] = []
    betas: list[float] = []
    scale = float(weight.abs().max())
    tiny = max(scale, 1.0) * 1e-12
    for _ in range(max_steps):
        r = weight.t() @ us[-1]
        if vs:
            r = r - betas[-1] * vs[-1]
            for v in vs:  # full reorthogonalization keeps the basis clean
                r = r - (v @ r) * v
        alpha = float(r.norm())
        if alpha <= tiny:
            break
        vs.append(r / alpha)
        alphas.append(alpha)
        p = weight @ vs[-1] - alpha * us[-1]
        for u in us:
            p = p - (u @ p) * u
        beta = float(p.norm())
        if beta <= tiny:
            betas.append(0.0)
            break
        betas.append(beta)
        us.append(p / beta)
    if not vs:
        return None
    coeffs = _bidiagonal_top_right_vector(alphas, betas)
    v_top = torch.zeros_like(vs[0])
    for c, v in zip(coeffs, vs):
        v_top = v_top + float(c) * v
    v_top = _safe_normalize(v_top, vs[0])
    u_top = _safe_normalize(weight @ v_top, us[0])
    return u_top, v_top


def spectral_normalize(weight: torch.Tensor, u: torch.Tensor, n_iter: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Divide a 2-D weight by its estimated largest singular value.

    Runs `n_iter` power-iteration sweeps from the persistent left-singular
    estimate `u` (n_iter = 0 reuses the stored estimate as-is) and returns
    weight / sigma with sigma = u^T W v. The sweep updates carry no gradient;
    sigma keeps its dependence on W so the normalized weight stays
    differentiable. A zero weight matrix is returned unchanged (sigma floored
    at 1e-12).
    """
    if weight.ndim != 2:
        raise ValueError(f"spectral_normalize expects a 2-D weight, got shape {tuple(weight.shape)}")
    with torch.no_grad():
        zero_v = torch.zeros(weight.shape[1], dtype=weight.dtype)
        if n_iter <= 0:
            u_est = u
            v = _safe_normalize(weight.t() @ u_est, zero_v)
        elif n_iter == 1:
            v = _safe_normalize(weight.t() @ u, zero_v)
            u_est = _safe_normalize(weight @ v, u)
        else:
            pair = _krylov_sigma(weight.detach(), u.detach(), n_iter)
            if pair is None:
                u_est, v = u, zero_v
            else:
                u_est, v = pair
    sigma = torch.clamp(u_est @ weight @ v, min=SIGMA_FLOOR)
    return weight / sigma, u_est
