"""Correlation-consistency losses and the composite GMC objective.

``pgcc_loss`` is ``1 - PLCC`` and ``sgcc_loss`` is ``1 - PLCC`` of the
differentiable rank proxies. ``gmc_loss`` multiplies the batch MSE by
``alpha * PGCC + beta * SGCC + gamma``, where the correlation terms are taken
over the queue contents followed by the current batch.

Gradients flow into predictions only; labels and queued values are constants.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import numgrad as ng
from .numgrad import Tensor
from .rankest import estimate_ranks, normalize_scores
from .scorequeue import ScoreQueue

logger = logging.getLogger(__name__)


class DegenerateBatchWarning(RuntimeWarning):
    """A correlation term was skipped because an input was constant."""


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _vectors(p, g) -> tuple[Tensor, Tensor]:
    p, g = ng.as_tensor(p), ng.as_tensor(g)
    if p.ndim != 1 or g.ndim != 1:
        raise ng.ShapeError("losses expect 1-D score vectors")
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} vs {g.shape[0]}")
    return p, g


def mse_loss(p, g) -> Tensor:
    p, g = _vectors(p, g)
    if p.shape[0] < 1:
        raise ValueError("mse_loss needs at least one sample")
    return ng.mean(ng.square(p - ng.Tensor(g.data)))


def _correlation(x, y) -> Tensor | None:
    """Differentiable PLCC as the dot product of unit-norm centred vectors."""
    sx, sy = normalize_scores(x), normalize_scores(y)
    if sx.degenerate or sy.degenerate:
        return None
    return ng.sum_(sx.s * sy.s)


def _skip(which: str) -> Tensor:
    warnings.warn(f"{which}: constant input, correlation term skipped", DegenerateBatchWarning,
                  stacklevel=3)
    return Tensor(0.0)


def pgcc_loss(p, g) -> Tensor:
    """``1 - PLCC(p, g)``, in [0, 2]. Constant input gives 0 with a warning."""
    p, g = _vectors(p, g)
    rho = _correlation(p, ng.Tensor(g.data))
    if rho is None:
        return _skip("pgcc_loss")
    return 1.0 - rho


def sgcc_loss(p, g) -> Tensor:
    """``1 - PLCC`` of the rank proxies of ``p`` and ``g``, in [0, 2]."""
    p, g = _vectors(p, g)
    rp = estimate_ranks(p)
    rg = estimate_ranks(ng.Tensor(g.data))
    if rp.degenerate or rg.degenerate:
        return _skip("sgcc_loss")
    rho = _correlation(rp.sigma, rg.sigma)
    if rho is None:
        return _skip("sgcc_loss")
    return 1.0 - rho


def pgcc_mse_identity_residual(p, g) -> float:
    """Gap between each correlation loss and its scaled-MSE rewriting.

    ``1 - PLCC(x, y) == n/2 * mean((S_x - S_y)^2)`` for unit-norm centred
    ``S``. Returns the larger residual of the score-level and the rank-proxy
    level versions.
    """
    p, g = _vectors(ng.as_tensor(p).detach(), g)
    n = p.shape[0]
    if n < 2:
        raise ValueError("identity needs n >= 2")
    sp, sg = normalize_scores(p), normalize_scores(g)
    if sp.degenerate or sg.degenerate:
        raise ValueError("identity undefined for constant input")
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegenerateBatchWarning)
        pg = pgcc_loss(p, g).item()
        sgcc = sgcc_loss(p, g).item()
    score_gap = abs(pg - n / 2.0 * mse_loss(sp.s, sg.s).item())
    rp, rg = estimate_ranks(p).sigma, estimate_ranks(g).sigma
    rank_gap = abs(sgcc - n / 2.0 * mse_loss(normalize_scores(rp).s, normalize_scores(rg).s).item())
    return max(score_gap, rank_gap)


def _queue_arrays(queue) -> tuple[np.ndarray, np.ndarray]:
    if queue is None:
        return np.empty(0), np.empty(0)
    if isinstance(queue, ScoreQueue):
        return queue.snapshot()
    preds, gts = queue
    return np.asarray(preds, dtype=np.float64), np.asarray(gts, dtype=np.float64)


def gcc_factor(p_batch, g_batch, queue=None, cfg: LossConfig = LossConfig()) -> Tensor:
    """``alpha * PGCC + beta * SGCC + gamma`` over queue-then-batch sequences.

    Falls back to ``gamma`` (with a logged warning) when the combined
    sequence is shorter than 2 or constant.
    """
    p_batch, g_batch = _vectors(p_batch, g_batch)
    q_pred, q_gt = _queue_arrays(queue)
    if cfg.alpha == 0.0 and cfg.beta == 0.0:
        return Tensor(cfg.gamma)
    if q_pred.size + p_batch.shape[0] < 2:
        logger.warning("gcc_factor: fewer than 2 scores in queue+batch, using gamma only")
        return Tensor(cfg.gamma)
    p_all = ng.concat([Tensor(q_pred), p_batch]) if q_pred.size else p_batch
    g_all = np.concatenate([q_gt, g_batch.data])
    factor = Tensor(cfg.gamma)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateBatchWarning)
        if cfg.alpha:
            factor = factor + cfg.alpha * pgcc_loss(p_all, g_all)
        if cfg.beta:
            factor = factor + cfg.beta * sgcc_loss(p_all, g_all)
    if any(issubclass(w.category, DegenerateBatchWarning) for w in caught):
        logger.warning("gcc_factor: constant scores in queue+batch, using gamma only")
        return Tensor(cfg.gamma)
    return factor


def gmc_loss(p_batch, g_batch, queue=None, cfg: LossConfig = LossConfig()) -> Tensor:
    """``[alpha * PGCC + beta * SGCC + gamma] * MSE(p_batch, g_batch)``.

    ``queue`` is a :class:`ScoreQueue`, a ``(preds, gts)`` pair of arrays, or
    None; its values are treated as constants.
    """
    p_batch, g_batch = _vectors(p_batch, g_batch)
    if p_batch.shape[0] == 0:
        raise ValueError("gmc_loss needs a non-empty batch")
    return gcc_factor(p_batch, g_batch, queue, cfg) * mse_loss(p_batch, g_batch)
