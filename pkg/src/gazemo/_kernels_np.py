"""Pure-numpy kernels: the fallback backend for the compiled extension.

All kernels operate on raw ndarrays and know nothing about autodiff.
Shapes are fixed by the callers in :mod:`gazemo.tensor`:

* conv kernels: ``x (B, C_in, L)``, ``w (C_out, C_in, 3)``, ``b (C_out)``
  with stride 1 and zero padding 1 on each side (length preserving).
* layer-norm kernels: ``x (R, K)`` where each row is normalized over K.
"""

from __future__ import annotations

import numpy as np


def conv1d_k3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    B, Ci, L = x.shape
    xp = np.zeros((B, Ci, L + 2), dtype=x.dtype)
    xp[:, :, 1 : L + 1] = x
    y = np.broadcast_to(b[:, None], (B, b.shape[0], L)).copy()
    for k in range(3):
        y += np.matmul(w[:, :, k], xp[:, :, k : k + L])
    return y


def conv1d_k3_backward(
    x: np.ndarray, w: np.ndarray, gy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    B, Ci, L = x.shape
    xp = np.zeros((B, Ci, L + 2), dtype=x.dtype)
    xp[:, :, 1 : L + 1] = x
    gb = gy.sum(axis=(0, 2))
    gw = np.empty_like(w)
    gxp = np.zeros((B, Ci, L + 2), dtype=x.dtype)
    for k in range(3):
        gw[:, :, k] = np.einsum("bol,bil->oi", gy, xp[:, :, k : k + L])
        gxp[:, :, k : k + L] += np.matmul(w[:, :, k].T, gy)
    return gxp[:, :, 1 : L + 1], gw, gb


def layer_norm_forward(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = x.mean(axis=1)
    var = x.var(axis=1)
    istd = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = (x - mean[:, None]) * istd[:, None]
    return xhat * gain + bias, mean, istd


def layer_norm_backward(
    x: np.ndarray,
    mean: np.ndarray,
    istd: np.ndarray,
    gain: np.ndarray,
    gy: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat = (x - mean[:, None]) * istd[:, None]
    dxhat = gy * gain
    ggain = (gy * xhat).sum(axis=0)
    gbias = gy.sum(axis=0)
    gx = istd[:, None] * (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    )
    return gx, ggain, gbias
