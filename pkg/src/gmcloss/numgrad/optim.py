"""Adam with decoupled weight decay, and a restarting cosine learning-rate schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import ShapeError, Tensor


@dataclass
class AdamState:
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params, **kwargs) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p.data) for p in params],
            second_moment=[np.zeros_like(p.data) for p in params],
            **kwargs,
        )


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState,
              lr: float, weight_decay: float = 0.0) -> None:
    """One in-place Adam update.

    Weight decay is decoupled: ``p -= lr * weight_decay * p`` alongside the
    adaptive step, so it never enters the moment estimates.
    """
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeError("adam_step: params, grads and moment buffers differ in count")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != np.shape(g) or m.shape != p.shape:
            raise ShapeError(f"adam_step: parameter {p.shape} vs gradient {np.shape(g)}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        update = (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)
        if weight_decay:
            update = update + weight_decay * p.data
        p.data -= lr * update


def cosine_annealing_lr(step: int, period: int, base_lr: float) -> float:
    """Cosine decay from ``base_lr`` to 0 over ``period`` steps, then restart."""
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    phase = (step % period) / period
    return base_lr * (1.0 + math.cos(math.pi * phase)) / 2.0
