"""Exact PLCC / SROCC evaluation metrics.

These are the non-differentiable reference metrics used for model
evaluation and as oracles for the differentiable surrogates in
:mod:`gmcloss.gccloss`.
"""
from __future__ import annotations

import numpy as np

DEGENERATE_STD = 1e-12


class DegenerateInputError(ValueError):
    """A correlation was requested on a (numerically) constant vector."""


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("correlation needs at least 2 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("correlation inputs must be finite")
    return x, y


def pearson(x, y) -> float:
    """Pearson linear correlation coefficient (PLCC).

    Raises :class:`DegenerateInputError` if either input has standard
    deviation below 1e-12.
    """
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    if np.std(x) < DEGENERATE_STD:
        raise DegenerateInputError("first argument is constant")
    if np.std(y) < DEGENERATE_STD:
        raise DegenerateInputError("second argument is constant")
    r = np.dot(dx / np.linalg.norm(dx), dy / np.linalg.norm(dy))
    return float(np.clip(r, -1.0, 1.0))


def average_ranks(x) -> np.ndarray:
    """1-based fractional ranks; ties share the mean of the positions they occupy."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    # start index of each run of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], n]
    run_rank = (starts + ends + 1) / 2.0  # mean of 1-based positions starts+1..ends
    ranks = np.empty(n)
    ranks[order] = np.repeat(run_rank, ends - starts)
    return ranks


def spearman(x, y) -> float:
    """Spearman rank-order correlation (SROCC): PLCC of average ranks."""
    x, y = _pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))
