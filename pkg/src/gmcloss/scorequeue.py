"""Bounded FIFO of detached (prediction, ground-truth) pairs."""
from __future__ import annotations

import math

import numpy as np


def capacity_from_ratio(r: float, dataset_size: int) -> int:
    """Queue capacity ``floor(r * dataset_size)``, at least 1."""
    if not 0.0 < r <= 1.0:
        raise ValueError(f"queue ratio must lie in (0, 1], got {r}")
    if dataset_size < 1:
        raise ValueError(f"dataset size must be positive, got {dataset_size}")
    return max(1, math.floor(r * dataset_size))


class ScoreQueue:
    """Ring buffer holding the ``capacity`` most recently pushed pairs.

    Values are stored as plain floats, so nothing pushed here keeps a link to
    the graph that produced it.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be a positive integer, got {capacity}")
        self.capacity = int(capacity)
        self._pred = np.empty(self.capacity)
        self._gt = np.empty(self.capacity)
        self._start = 0
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def __repr__(self) -> str:
        return f"ScoreQueue(capacity={self.capacity}, len={self._len})"

    def push_batch(self, preds, gts) -> "ScoreQueue":
        preds = np.asarray(getattr(preds, "data", preds), dtype=np.float64).ravel()
        gts = np.asarray(getattr(gts, "data", gts), dtype=np.float64).ravel()
        if preds.shape != gts.shape:
            raise ValueError(f"preds and gts differ in length: {preds.size} vs {gts.size}")
        k = self.capacity
        if preds.size >= k:
            self._pred[:] = preds[-k:]
            self._gt[:] = gts[-k:]
            self._start, self._len = 0, k
            return self
        end = self._start + self._len
        slots = (end + np.arange(preds.size)) % k
        self._pred[slots] = preds
        self._gt[slots] = gts
        overflow = max(0, self._len + preds.size - k)
        self._start = (self._start + overflow) % k
        self._len = min(k, self._len + preds.size)
        return self

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        """Copies of the stored predictions and labels, oldest first."""
        idx = (self._start + np.arange(self._len)) % self.capacity
        return self._pred[idx], self._gt[idx]
