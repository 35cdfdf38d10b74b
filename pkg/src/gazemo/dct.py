"""Orthonormal DCT-II along the temporal (trailing) axis.

The orthonormal variant makes the inverse the exact transpose, so the
encode/decode pair is numerically negligible round-trip noise. Matrices
are built in float64 and cast to the working precision on use; sizes here
never exceed ~80, so dense matmul beats any fast transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError
from .tensor import Tensor, matmul


@dataclass(frozen=True)
class DctMatrix:
    size: int
    forward: np.ndarray  # (T, T) float64; coefficients = signal @ forward
    inverse: np.ndarray  # transpose of forward


_CACHE: dict[int, DctMatrix] = {}


def build_dct(T: int) -> DctMatrix:
    """Orthonormal DCT-II matrix: entry[i][k] = c_k sqrt(2/T) cos(pi(2i+1)k/2T)."""
    if T < 1:
        raise ArgumentError(f"DCT size must be >= 1, got {T}")
    cached = _CACHE.get(T)
    if cached is not None:
        return cached
    i = np.arange(T, dtype=np.float64)[:, None]
    k = np.arange(T, dtype=np.float64)[None, :]
    m = np.sqrt(2.0 / T) * np.cos(np.pi * (2.0 * i + 1.0) * k / (2.0 * T))
    m[:, 0] *= 1.0 / np.sqrt(2.0)
    mat = DctMatrix(size=T, forward=m, inverse=m.T.copy())
    _CACHE[T] = mat
    return mat


def _apply(x: Tensor, m: np.ndarray, size: int) -> Tensor:
    if x.shape[-1] != size:
        raise DimensionError(
            f"trailing dimension {x.shape} does not match DCT size {size}"
        )
    return matmul(x, Tensor(m.astype(x.dtype)))


def dct_forward(x: Tensor, m: DctMatrix) -> Tensor:
    return _apply(x, m.forward, m.size)


def dct_inverse(x: Tensor, m: DctMatrix) -> Tensor:
    return _apply(x, m.inverse, m.size)
