"""Differentiable rank estimation from pairwise preference probabilities.

Scores are centred and scaled to unit l2 norm, every ordered pair ``(i, j)``
gets the probability ``H_ij = Phi(s_i - s_j)`` (standard normal CDF) that
item ``i`` beats item ``j``, and the rank proxy of item ``i`` is the row mean
``sigma_i = mean_k H_ik``.

Two numerically equivalent routes compute ``sigma``:

``"matrix"``
    Materialises ``H`` from autodiff primitives. O(n^2) time and memory.
``"moments"``
    Uses that unit-norm scores satisfy ``|s_i - s_k| <= sqrt(2)``. On that
    interval ``Phi(b) - 1/2`` is replaced by its odd Taylor polynomial,
    truncated once the first omitted term drops below 1e-20 for the actual
    score spread (degree 41 at most). ``sum_k f(s_i - s_k)`` for a
    polynomial ``f`` expands binomially into power sums of ``s``, so forward
    and backward are O(n * degree) with rounding error near ``1e-16``.

``"auto"`` picks ``moments`` for n >= 64.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial, pi, sqrt
from typing import NamedTuple

import numpy as np

from . import numgrad as ng
from .numgrad import Tensor

DEGENERATE_NORM = 1e-12
AUTO_MOMENTS_MIN_N = 64
_SERIES_J = 21  # at most the odd terms b^1 .. b^41


class NormalizedScores(NamedTuple):
    s: Tensor
    degenerate: bool


class EstimatedRanks(NamedTuple):
    sigma: Tensor
    degenerate: bool


def normalize_scores(p) -> NormalizedScores:
    """Centre ``p`` and scale it to unit l2 norm.

    A (numerically) constant ``p`` yields the all-zero vector with
    ``degenerate=True``; no gradient flows in that case.
    """
    p = ng.as_tensor(p)
    if p.ndim != 1:
        raise ng.ShapeError(f"scores must be 1-D, got shape {p.shape}")
    n = p.shape[0]
    if n < 2:
        raise ValueError("normalize_scores needs at least 2 scores")
    dev = p - ng.mean(p)
    norm = ng.sqrt(ng.sum_(ng.square(dev)))
    if norm.item() < DEGENERATE_NORM:
        return NormalizedScores(Tensor(np.zeros(n)), True)
    return NormalizedScores(dev / norm, False)


def preference_matrix(s) -> Tensor:
    """``H_ij = 1/2 * (1 + erf((s_i - s_j) / sqrt(2)))`` as an n x n tensor."""
    if isinstance(s, NormalizedScores):
        s = s.s
    s = ng.as_tensor(s)
    if s.ndim != 1:
        raise ng.ShapeError(f"scores must be 1-D, got shape {s.shape}")
    n = s.shape[0]
    rows = ng.matmul(ng.reshape(s, (n, 1)), Tensor(np.ones((1, n))))  # rows[i, j] = s_i
    diff = rows - ng.transpose(rows)
    return 0.5 * (1.0 + ng.erf(diff * (1.0 / sqrt(2.0))))


# --- O(n) route ------------------------------------------------------------------


class _PairSum:
    """Evaluates ``sum_k w_k f(x_i - y_k)`` for a fixed polynomial ``f``.

    ``f(x - y) = sum_m a_m sum_t C(m, t) x^t (-y)^(m-t)``, so the sum over k is
    a polynomial in ``x`` whose coefficients are weighted power sums of ``y``.
    """

    def __init__(self, coeffs):
        a = np.asarray(coeffs, dtype=np.float64)
        deg = a.size - 1
        t, m = np.meshgrid(np.arange(deg + 1), np.arange(deg + 1), indexing="ij")
        upper = m >= t
        binom = np.array([[comb(mm, tt) if mm >= tt else 0 for mm in range(deg + 1)]
                          for tt in range(deg + 1)], dtype=np.float64)
        self.deg = deg
        self.weights = np.where(upper, a[m] * binom * (-1.0) ** (m - t), 0.0)
        self.power_index = np.where(upper, m - t, 0)

    def __call__(self, x: np.ndarray, powers: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
        """``powers[k, r] = y_k ** r`` for r up to at least ``deg``."""
        powers = powers[:, :self.deg + 1]
        moments = powers.sum(axis=0) if w is None else w @ powers
        c = (self.weights * moments[self.power_index]).sum(axis=1)
        out = np.full_like(x, c[-1])
        for coef in c[-2::-1]:
            out = out * x + coef
        return out


def _cdf_offset_coeffs(terms: int) -> np.ndarray:
    # Phi(b) - 1/2 = 1/sqrt(2 pi) * sum_j (-1)^j b^(2j+1) / (2^j j! (2j+1))
    a = np.zeros(2 * terms)
    for j in range(terms):
        a[2 * j + 1] = (-1) ** j / (sqrt(2 * pi) * 2 ** j * factorial(j) * (2 * j + 1))
    return a


@lru_cache(maxsize=None)
def _pair_sums(terms: int) -> tuple[_PairSum, _PairSum]:
    a = _cdf_offset_coeffs(terms)
    # the density polynomial is the exact derivative of the truncated CDF one
    return _PairSum(a), _PairSum(a[1:] * np.arange(1, a.size))


def _series_terms(spread: float) -> int:
    """Fewest odd terms whose first omitted term is below 1e-20 for |b| <= spread."""
    for j in range(1, _SERIES_J):
        first_omitted = spread ** (2 * j) / (sqrt(2 * pi) * 2 ** j * factorial(j))
        if first_omitted < 1e-20:
            return j
    return _SERIES_J


def rank_proxy(s) -> Tensor:
    """Row means of the preference matrix for unit-norm ``s``, in O(n).

    ``s`` must have ``sum(s**2) <= 1`` (true for :func:`normalize_scores`
    output); the series bound relies on it.
    """
    if isinstance(s, NormalizedScores):
        s = s.s
    s = ng.as_tensor(s)
    x = s.data
    if x.ndim != 1:
        raise ng.ShapeError(f"scores must be 1-D, got shape {s.shape}")
    if float(x @ x) > 1.0 + 1e-9:
        raise ValueError("rank_proxy needs scores with l2 norm <= 1")
    n = x.size
    cdf_sum, pdf_sum = _pair_sums(_series_terms(float(x.max() - x.min())))
    powers = np.vander(x, cdf_sum.deg + 1, increasing=True)
    sigma = 0.5 + cdf_sum(x, powers) / n

    def grad_fn(u):
        own = pdf_sum(x, powers)
        cross = pdf_sum(x, powers, u)
        return ((u * own - cross) / n,)

    return ng.tensor._make(sigma, (s,), grad_fn, "rank_proxy")


def estimate_ranks(p, method: str = "auto") -> EstimatedRanks:
    """Differentiable rank proxy ``sigma`` of the scores ``p``.

    Each ``sigma_i`` lies in (0, 1), the entries sum to n/2, and the order of
    ``sigma`` matches the order of ``p``. Constant ``p`` gives 0.5 everywhere
    with ``degenerate=True``.
    """
    norm = normalize_scores(p)
    n = norm.s.shape[0]
    if norm.degenerate:
        return EstimatedRanks(Tensor(np.full(n, 0.5)), True)
    if method == "auto":
        method = "moments" if n >= AUTO_MOMENTS_MIN_N else "matrix"
    if method == "matrix":
        sigma = ng.mean(preference_matrix(norm.s), axis=1)
    elif method == "moments":
        sigma = rank_proxy(norm.s)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EstimatedRanks(sigma, False)
