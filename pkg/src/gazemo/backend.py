"""Kernel backend selection: compiled extension if available, numpy otherwise.

``GAZEMO_BACKEND=numpy`` forces the fallback; ``GAZEMO_BACKEND=compiled``
raises at import if the extension is missing. Only the inner-loop kernels
live behind this switch -- everything matmul-shaped stays on numpy/BLAS,
which is already compiled code.
"""

from __future__ import annotations

import os

from . import _kernels_np

_FORCED = os.environ.get("GAZEMO_BACKEND", "").strip().lower()

if _FORCED == "numpy":
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _FORCED == "compiled":
            raise
        _impl = _kernels_np
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def conv1d_k3_forward(x, w, b):
    return _impl.conv1d_k3_forward(x, w, b)


def conv1d_k3_backward(x, w, gy):
    return _impl.conv1d_k3_backward(x, w, gy)


def layer_norm_forward(x, gain, bias, eps):
    return _impl.layer_norm_forward(x, gain, bias, eps)


def layer_norm_backward(x, mean, istd, gain, gy):
    return _impl.layer_norm_backward(x, mean, istd, gain, gy)
