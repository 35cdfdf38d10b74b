"""Dense tensors with reverse-mode automatic differentiation.

Just enough of an autodiff engine for the forecasting pipeline: tensors wrap
numpy arrays, and every differentiable op records a backward rule onto the
active :class:`Tape`. With no tape active, ops run forward-only (inference).

Conventions
-----------
* float32 is the working precision; float64 is used for gradient checking.
* Gradients accumulate additively into ``Tensor.grad``; call
  :func:`zero_grads` between optimizer steps.
* Tensors are never mutated in place once produced by an op.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from . import backend
from .errors import ArgumentError, ContractError, DimensionError

DEFAULT_DTYPE = np.float32

_DEBUG_CHECKS = False


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf checking after every forward op (slow; for tests)."""
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{tag})"

    # operator sugar; all arithmetic goes through the module-level ops
    def __add__(self, other):
        return add(self, _wrap(other, self.dtype))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _wrap(other, self.dtype))

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self.dtype))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _wrap(other, self.dtype))

    def __rtruediv__(self, other):
        return div(_wrap(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return getitem(self, idx)


def _wrap(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


class _Op:
    __slots__ = ("name", "inputs", "out", "backward")

    def __init__(self, name, inputs, out, backward):
        self.name = name
        self.inputs = inputs
        self.out = out
        self.backward = backward


class Tape:
    """Ordered record of ops; execution order is already topological.

    Usable as a context manager::

        with Tape() as tape:
            loss = model(x)
        tape.backward(loss)
    """

    def __init__(self):
        self._ops: list[_Op] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPE_STACK.remove(self)

    def __len__(self) -> int:
        return len(self._ops)

    def _record(self, name, inputs, out, backward) -> None:
        self._ops.append(_Op(name, inputs, out, backward))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(t) into ``t.grad`` for every recorded tensor."""
        if loss.data.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {loss.shape}"
            )
        flows: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        holders: dict[int, Tensor] = {id(loss): loss}
        for op in reversed(self._ops):
            gy = flows.pop(id(op.out), None)
            if gy is None:
                continue
            holders.pop(id(op.out), None)
            if op.out.requires_grad:
                _accumulate(op.out, gy)
            grads = op.backward(gy)
            for t, g in zip(op.inputs, grads):
                if g is None or not t.requires_grad:
                    continue
                key = id(t)
                if key in flows:
                    flows[key] = flows[key] + g
                else:
                    flows[key] = g
                    holders[key] = t
        for key, g in flows.items():
            t = holders[key]
            if t.requires_grad:
                _accumulate(t, g)


_TAPE_STACK: list[Tape] = []


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad = t.grad + g


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


def _make(
    name: str,
    data: np.ndarray,
    inputs: tuple[Tensor, ...],
    backward: Callable[[np.ndarray], tuple],
) -> Tensor:
    if _DEBUG_CHECKS and not np.all(np.isfinite(data)):
        raise ContractError(f"op {name!r} produced non-finite values")
    rg = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=rg)
    tape = _active_tape()
    if tape is not None and rg:
        tape._record(name, inputs, out, backward)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and broadcasting ops


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data
    return _make(
        "add",
        data,
        (a, b),
        lambda gy: (_unbroadcast(gy, a.shape), _unbroadcast(gy, b.shape)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data
    return _make(
        "sub",
        data,
        (a, b),
        lambda gy: (_unbroadcast(gy, a.shape), _unbroadcast(-gy, b.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data
    return _make(
        "mul",
        data,
        (a, b),
        lambda gy: (
            _unbroadcast(gy * b.data, a.shape),
            _unbroadcast(gy * a.data, b.shape),
        ),
    )


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data
    return _make(
        "div",
        data,
        (a, b),
        lambda gy: (
            _unbroadcast(gy / b.data, a.shape),
            _unbroadcast(-gy * a.data / (b.data * b.data), b.shape),
        ),
    )


def neg(a: Tensor) -> Tensor:
    return _make("neg", -a.data, (a,), lambda gy: (-gy,))


def power(a: Tensor, p: float) -> Tensor:
    p = float(p)
    data = a.data**p
    return _make(
        "power", data, (a,), lambda gy: (gy * p * a.data ** (p - 1.0),)
    )


def sqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)
    return _make("sqrt", data, (a,), lambda gy: (gy * 0.5 / data,))


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)
    return _make("tanh", data, (a,), lambda gy: (gy * (1.0 - data * data),))


def arccos(a: Tensor) -> Tensor:
    data = np.arccos(a.data)
    return _make(
        "arccos",
        data,
        (a,),
        lambda gy: (-gy / np.sqrt(1.0 - a.data * a.data),),
    )


def clip(a: Tensor, lo: float | None, hi: float | None) -> Tensor:
    data = np.clip(a.data, lo, hi)
    mask = np.ones(a.shape, dtype=bool)
    if lo is not None:
        mask &= a.data >= lo
    if hi is not None:
        mask &= a.data <= hi
    return _make("clip", data, (a,), lambda gy: (gy * mask,))


def where(cond: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    cond = np.asarray(cond, dtype=bool)
    data = np.where(cond, a.data, b.data)
    return _make(
        "where",
        data,
        (a, b),
        lambda gy: (
            _unbroadcast(gy * cond, a.shape),
            _unbroadcast(gy * ~cond, b.shape),
        ),
    )


# ---------------------------------------------------------------------------
# shape ops


def permute(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(ax % a.ndim for ax in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise DimensionError(f"invalid permutation {axes} for shape {a.shape}")
    inv = tuple(np.argsort(axes))
    return _make(
        "permute",
        np.transpose(a.data, axes),
        (a,),
        lambda gy: (np.transpose(gy, inv),),
    )


def swap_axes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    axes = list(range(a.ndim))
    axes[ax1], axes[ax2] = axes[ax2], axes[ax1]
    return permute(a, axes)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    return _make(
        "reshape",
        a.data.reshape(shape),
        (a,),
        lambda gy: (gy.reshape(a.shape),),
    )


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    return _make(
        "broadcast_to",
        np.broadcast_to(a.data, shape),
        (a,),
        lambda gy: (_unbroadcast(gy, a.shape),),
    )


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ArgumentError("concat of an empty tensor list")
    axis = axis % tensors[0].ndim
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(gy):
        grads = []
        for i in range(len(sizes)):
            sl = [slice(None)] * gy.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(gy[tuple(sl)])
        return tuple(grads)

    return _make("concat", data, tuple(tensors), backward)


def getitem(a: Tensor, idx) -> Tensor:
    data = a.data[idx]

    def backward(gy):
        gx = np.zeros(a.shape, dtype=gy.dtype)
        gx[idx] = gy
        return (gx,)

    return _make("getitem", data, (a,), backward)


# ---------------------------------------------------------------------------
# reductions


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(gy):
        if axis is None:
            return (np.broadcast_to(gy, a.shape).astype(a.dtype, copy=False),)
        g = gy
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape),)

    return _make("sum", data, (a,), backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.size
    elif isinstance(axis, tuple):
        n = int(np.prod([a.shape[ax] for ax in axis]))
    else:
        n = a.shape[axis]
    s = tsum(a, axis=axis, keepdims=keepdims)
    return mul(s, Tensor(np.asarray(1.0 / n, dtype=a.dtype)))


# ---------------------------------------------------------------------------
# contractions


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy broadcasting over leading (batch) dims."""
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul requires rank >= 2 operands, got {a.shape} and {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul contraction mismatch: {a.shape} @ {b.shape}"
        )

    if b.ndim == 2:
        # single GEMM fast path: fold all leading dims of a
        k, p = b.shape
        a2 = np.ascontiguousarray(a.data).reshape(-1, k)
        data = (a2 @ b.data).reshape(a.shape[:-1] + (p,))

        def backward(gy):
            gy2 = np.ascontiguousarray(gy).reshape(-1, p)
            ga = (gy2 @ b.data.T).reshape(a.shape) if a.requires_grad else None
            gb = a2.T @ gy2 if b.requires_grad else None
            return (ga, gb)

        return _make("matmul", data, (a, b), backward)

    try:
        data = np.matmul(a.data, b.data)
    except ValueError as e:
        raise DimensionError(
            f"matmul broadcast failure: {a.shape} @ {b.shape}: {e}"
        ) from None

    def backward(gy):
        ga = gb = None
        if a.requires_grad:
            if a.ndim == 2:
                ga = np.einsum("...mp,...kp->mk", gy, b.data)
            else:
                ga = _unbroadcast(
                    np.matmul(gy, np.swapaxes(b.data, -1, -2)), a.shape
                )
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), gy), b.shape)
        return (ga, gb)

    return _make("matmul", data, (a, b), backward)


def matmul_axis(a: Tensor, b: Tensor, axes: tuple[int, int] = (-1, 0)) -> Tensor:
    """Contract a's ``axes[0]`` with b's ``axes[1]`` (single-axis tensordot).

    Result carries a's remaining axes (in order) followed by b's. Composed
    from differentiable primitives, so gradients come for free.
    """
    ax_a = axes[0] % a.ndim
    ax_b = axes[1] % b.ndim
    if a.shape[ax_a] != b.shape[ax_b]:
        raise DimensionError(
            f"contraction mismatch: {a.shape} axis {ax_a} vs {b.shape} axis {ax_b}"
        )
    k = a.shape[ax_a]
    a_perm = [i for i in range(a.ndim) if i != ax_a] + [ax_a]
    b_perm = [ax_b] + [i for i in range(b.ndim) if i != ax_b]
    a_rest = [a.shape[i] for i in a_perm[:-1]]
    b_rest = [b.shape[i] for i in b_perm[1:]]
    a2 = reshape(permute(a, a_perm), (-1, k)) if a.ndim > 1 else reshape(a, (1, k))
    b2 = reshape(permute(b, b_perm), (k, -1)) if b.ndim > 1 else reshape(b, (k, 1))
    out = matmul(a2, b2)
    return reshape(out, a_rest + b_rest)


# ---------------------------------------------------------------------------
# network ops backed by the kernel backend


def conv1d_same(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Length-preserving 1D convolution, kernel size 3, stride 1, zero pad 1.

    ``x`` is (C_in, L) or batched (B, C_in, L); kernels (C_out, C_in, 3).
    """
    if kernels.ndim != 3 or kernels.shape[2] != 3:
        raise DimensionError(f"kernels must be (C_out, C_in, 3), got {kernels.shape}")
    if x.ndim not in (2, 3):
        raise DimensionError(f"conv1d input must be 2D or 3D, got {x.shape}")
    if x.shape[-2] != kernels.shape[1]:
        raise DimensionError(
            f"channel mismatch: input {x.shape} vs kernels {kernels.shape}"
        )
    if bias.shape != (kernels.shape[0],):
        raise DimensionError(
            f"bias shape {bias.shape} does not match C_out={kernels.shape[0]}"
        )
    batched = x.ndim == 3
    x3 = np.ascontiguousarray(x.data if batched else x.data[None])
    w = np.ascontiguousarray(kernels.data)
    data3 = backend.conv1d_k3_forward(x3, w, np.ascontiguousarray(bias.data))
    data = data3 if batched else data3[0]

    def backward(gy):
        gy3 = np.ascontiguousarray(gy if batched else gy[None])
        gx3, gw, gb = backend.conv1d_k3_backward(x3, w, gy3)
        return (gx3 if batched else gx3[0], gw, gb)

    return _make("conv1d_same", data, (x, kernels, bias), backward)


def layer_norm(
    x: Tensor, axis: int, gain: Tensor, bias: Tensor, eps: float = 1e-5
) -> Tensor:
    """Normalize to zero mean / unit variance along ``axis``, then affine."""
    if eps <= 0:
        raise ArgumentError(f"layer_norm eps must be > 0, got {eps}")
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} out of range for shape {x.shape}")
    axis = axis % x.ndim
    k = x.shape[axis]
    if gain.shape != (k,) or bias.shape != (k,):
        raise DimensionError(
            f"gain/bias must have shape ({k},), got {gain.shape} and {bias.shape}"
        )
    moved = np.moveaxis(x.data, axis, -1)
    shape_moved = moved.shape
    x2 = np.ascontiguousarray(moved).reshape(-1, k)
    y2, mean_r, istd_r = backend.layer_norm_forward(
        x2, np.ascontiguousarray(gain.data), np.ascontiguousarray(bias.data), eps
    )
    data = np.moveaxis(y2.reshape(shape_moved), -1, axis)

    def backward(gy):
        gy2 = np.ascontiguousarray(np.moveaxis(gy, axis, -1)).reshape(-1, k)
        gx2, ggain, gbias = backend.layer_norm_backward(
            x2, mean_r, istd_r, np.ascontiguousarray(gain.data), gy2
        )
        gx = np.moveaxis(gx2.reshape(shape_moved), -1, axis)
        return (gx, ggain, gbias)

    return _make("layer_norm", data, (x, gain, bias), backward)


def dropout(
    x: Tensor, p: float, rng: np.random.Generator | None, train: bool
) -> Tensor:
    """Inverted dropout: scales by 1/(1-p) at train time, identity in eval."""
    if not 0.0 <= p < 1.0:
        raise ArgumentError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ArgumentError("dropout in train mode requires an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype)
    mask = keep / np.asarray(1.0 - p, dtype=x.dtype)
    return _make("dropout", x.data * mask, (x,), lambda gy: (gy * mask,))
