"""Central finite-difference validation of analytic gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward


class GradientCheckError(ValueError):
    pass


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def finite_difference_check(f: Callable[[Tensor], Tensor], x, eps: float = 1e-5) -> float:
    """Max over coordinates of ``|analytic - central_diff| / max(1, |analytic|)``.

    ``f`` maps a tensor shaped like ``x`` to a scalar tensor.
    """
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    return check_params(lambda ps: f(ps[0]), [Tensor(base)], eps)


def check_params(f: Callable[[list], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                 coords: dict | None = None) -> float:
    """Gradient check of ``f(params)`` with respect to every tensor in ``params``.

    ``coords`` optionally maps a parameter index to the flat coordinates to
    probe; unlisted parameters are probed everywhere. Parameters are restored
    afterwards.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = list(params)
    saved = [(p.requires_grad, p._grad) for p in params]
    for p in params:
        p.requires_grad = True
        p.zero_grad()
    try:
        out = f(params)
        if not np.all(np.isfinite(out.data)):
            raise GradientCheckError("function is not finite at x")
        backward(out)
        analytic = [p.grad.copy() for p in params]
        for p in params:
            p.requires_grad = False
        worst = 0.0
        for i, p in enumerate(params):
            flat = p.data.reshape(-1)
            probe = range(flat.size) if coords is None or i not in coords else coords[i]
            probe = list(probe)
            numeric = np.empty(len(probe))
            for j, c in enumerate(probe):
                orig = flat[c]
                flat[c] = orig + eps
                hi = f(params).item()
                flat[c] = orig - eps
                lo = f(params).item()
                flat[c] = orig
                if not (np.isfinite(hi) and np.isfinite(lo)):
                    raise GradientCheckError("function is not finite near x")
                numeric[j] = (hi - lo) / (2.0 * eps)
            worst = max(worst, _rel_err(analytic[i].reshape(-1)[probe], numeric))
        return worst
    finally:
        for p, (rg, g) in zip(params, saved):
            p.requires_grad = rg
            p._grad = g
