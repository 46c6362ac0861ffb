"""Central-difference verification of reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, no_grad


class EvaluationError(RuntimeError):
    """The checked function returned a non-finite or non-scalar value."""


@dataclass
class GradCheckReport:
    op_name: str
    max_rel_error: float
    element_count: int
    passed: bool
    tolerance: float = 1e-4
    worst_analytic: float = 0.0
    worst_numeric: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.op_name:<28} max_rel_error={self.max_rel_error:.3e} n={self.element_count} tol={self.tolerance:g}"


def _scalar(f, inputs) -> float:
    try:
        out = f(*inputs)
    except FloatingPointError as exc:
        raise EvaluationError(str(exc)) from None
    val = np.asarray(out.data if isinstance(out, Tensor) else out, dtype=np.float64)
    if val.size != 1:
        raise EvaluationError(f"function must return a scalar, got shape {val.shape}")
    val = float(val.reshape(()))
    if not np.isfinite(val):
        raise EvaluationError("function returned a non-finite value")
    return val


def grad_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
    name: str = "f",
    max_elements: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of scalar ``f(*inputs)`` against
    (f(x+h) - f(x-h)) / 2h for every element of every input.

    Relative error per element is |a - n| / max(|a|, |n|, 1e-8).
    ``max_elements`` samples that many elements per input (seeded) instead of
    all of them, for checks through large parameter sets.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError(f"step h={h} outside [1e-7, 1e-4]")
    inputs = list(inputs)
    for t in inputs:
        t.grad = None
    out = f(*inputs)
    if not isinstance(out, Tensor) or out.size != 1:
        raise EvaluationError("function must return a scalar Tensor")
    if not np.isfinite(out.data).all():
        raise EvaluationError("function returned a non-finite value")
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_pair = (0.0, 0.0)
    count = 0
    with no_grad():
        for t, ga in zip(inputs, analytic):
            flat = t.data.reshape(-1)
            idx = np.arange(flat.size)
            if max_elements is not None and flat.size > max_elements:
                idx = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
            for i in idx:
                orig = flat[i]
                hi, lo = orig + h, orig - h
                flat[i] = hi
                fp = _scalar(f, inputs)
                flat[i] = lo
                fm = _scalar(f, inputs)
                flat[i] = orig
                # divide by the step actually taken, not the nominal 2h
                num = (fp - fm) / (hi - lo)
                a = ga.reshape(-1)[i]
                err = abs(a - num) / max(abs(a), abs(num), 1e-8)
                if err > worst:
                    worst, worst_pair = err, (float(a), float(num))
                count += 1
    return GradCheckReport(name, worst, count, worst <= tol, tol, *worst_pair)
