"""Synthetic MOS regression data from a fixed random teacher network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray
    mos: np.ndarray
    latent_mos: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    noise_std: float

    @property
    def X_train(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def y_train(self) -> np.ndarray:
        return self.mos[self.train_idx]

    @property
    def X_test(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def y_test(self) -> np.ndarray:
        return self.mos[self.test_idx]


def generate_dataset(n: int, d: int, noise_std: float, seed: int,
                     teacher_hidden: int = 32) -> SyntheticDataset:
    """Standard-normal features scored by a random two-layer tanh teacher.

    Teacher outputs are mapped affinely onto [0, 100], perturbed with
    Gaussian noise of scale ``noise_std`` and clamped back to [0, 100]. The
    split is a random 80/20 partition.
    """
    if n < 10:
        raise ValueError(f"need at least 10 samples, got {n}")
    if d < 1:
        raise ValueError(f"need at least one feature, got {d}")
    if not noise_std >= 0:
        raise ValueError(f"noise_std must be non-negative, got {noise_std}")
    feat_rng, teacher_rng, noise_rng, split_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4))
    features = feat_rng.standard_normal((n, d))
    w1 = teacher_rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, teacher_hidden))
    b1 = teacher_rng.normal(0.0, 0.5, size=teacher_hidden)
    w2 = teacher_rng.normal(0.0, 1.0 / np.sqrt(teacher_hidden), size=teacher_hidden)
    raw = np.tanh(features @ w1 + b1) @ w2
    latent = 100.0 * (raw - raw.min()) / (raw.max() - raw.min())
    if noise_std > 0:
        mos = np.clip(latent + noise_rng.normal(0.0, noise_std, size=n), 0.0, 100.0)
    else:
        mos = latent.copy()
    order = split_rng.permutation(n)
    n_train = int(round(TRAIN_FRACTION * n))
    return SyntheticDataset(
        features=features,
        mos=mos,
        latent_mos=latent,
        train_idx=np.sort(order[:n_train]),
        test_idx=np.sort(order[n_train:]),
        seed=seed,
        noise_std=float(noise_std),
    )
