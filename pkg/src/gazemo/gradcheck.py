"""Finite-difference gradient checking for whole-model closures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError
from .tensor import Tape, Tensor, zero_grads


@dataclass
class ParamCheck:
    name: str
    max_rel_err: float
    n_checked: int
    passed: bool


@dataclass
class GradCheckReport:
    tolerance: float
    entries: list[ParamCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_rel_err(self) -> float:
        return max((e.max_rel_err for e in self.entries), default=0.0)

    def render(self) -> str:
        lines = [f"{'parameter':<28} {'max rel err':>12} {'checked':>8}  status"]
        for e in self.entries:
            status = "ok" if e.passed else "FAIL"
            lines.append(
                f"{e.name:<28} {e.max_rel_err:>12.3e} {e.n_checked:>8}  {status}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"overall: {verdict} (tolerance {self.tolerance:g})")
        return "\n".join(lines)


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-6)


def grad_check(
    forward: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    tolerance: float = 1e-4,
    subsample_threshold: int = 10_000,
    subsample: int = 1024,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of ``forward()`` with central differences.

    ``forward`` must be deterministic (dropout disabled) and all params must
    be float64; both preconditions are enforced, not assumed. Parameters
    above ``subsample_threshold`` elements are checked on a random subsample.
    """
    for p in params:
        if p.dtype != np.float64:
            raise ContractError(
                f"grad_check requires float64 parameters, got {p.dtype} "
                f"for {p.name or 'unnamed param'}"
            )
    probe_a = forward()
    probe_b = forward()
    if not np.array_equal(probe_a.data, probe_b.data):
        raise ContractError(
            "grad_check refuses to run: forward pass is stochastic "
            "(two evaluations differ; disable dropout)"
        )

    zero_grads(params)
    with Tape() as tape:
        loss = forward()
    tape.backward(loss)
    analytic = [None if p.grad is None else p.grad.copy() for p in params]
    zero_grads(params)

    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance=tolerance)
    for i, (p, ga) in enumerate(zip(params, analytic)):
        name = p.name or f"param{i}"
        flat = p.data.reshape(-1)
        n_el = flat.size
        if n_el > subsample_threshold:
            idxs = rng.choice(n_el, size=subsample, replace=False)
        else:
            idxs = np.arange(n_el)
        ga_flat = (
            np.zeros(n_el) if ga is None else np.asarray(ga, dtype=np.float64).reshape(-1)
        )
        worst = 0.0
        for j in idxs:
            orig = flat[j]
            flat[j] = orig + eps
            f_plus = forward().item()
            flat[j] = orig - eps
            f_minus = forward().item()
            flat[j] = orig
            num = (f_plus - f_minus) / (2.0 * eps)
            worst = max(worst, _rel_err(float(ga_flat[j]), num))
        report.entries.append(
            ParamCheck(
                name=name,
                max_rel_err=worst,
                n_checked=len(idxs),
                passed=worst <= tolerance,
            )
        )
    return report
