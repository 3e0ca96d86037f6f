"""Single training runs on the synthetic benchmark."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ExperimentConfig
from .dataset import SyntheticDataset, generate_dataset

SROCC_TARGET = 0.8


@dataclass
class TrainReport:
    seed: int
    epochs: int
    loss: list
    train_srocc: list
    train_plcc: list
    test_srocc: list
    test_plcc: list
    queue_capacity: int
    config: dict
    final: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    """NaN/inf become None so the report is strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def epochs_to_reach(curve, target: float = SROCC_TARGET) -> float:
    """1-based epoch at which ``curve`` first reaches ``target``; inf if never."""
    for i, value in enumerate(curve):
        if value is not None and not math.isnan(value) and value >= target:
            return float(i + 1)
    return math.inf


def estimator_params(cfg: ExperimentConfig, seed: int) -> dict:
    """Translate a config plus loss kind into :class:`GMCRegressor` parameters."""
    kind = cfg.training.loss_kind
    alpha, beta, gamma = cfg.loss.alpha, cfg.loss.beta, cfg.loss.gamma
    queue_ratio = cfg.queue_ratio
    if kind == "pgcc-only":
        beta = 0.0
    elif kind == "sgcc-only":
        alpha = 0.0
    elif kind == "no-queue":
        queue_ratio = 0.0
    return dict(
        model=cfg.training.model,
        loss="mse" if kind == "mse" else "gmc",
        alpha=alpha, beta=beta, gamma=gamma,
        queue_ratio=queue_ratio,
        epochs=cfg.training.epochs,
        batch_size=cfg.training.batch_size,
        lr=cfg.optimizer.lr,
        weight_decay=cfg.optimizer.weight_decay,
        lr_period=cfg.optimizer.lr_period,
        hidden=tuple(cfg.training.hidden),
        monet_config=cfg.monet,
        random_state=seed,
    )


def dataset_for(cfg: ExperimentConfig, seed: int) -> SyntheticDataset:
    ds = cfg.dataset
    return generate_dataset(ds.n, ds.d, ds.noise_std, seed, ds.teacher_hidden)


def train(cfg: ExperimentConfig, seed: int, data: SyntheticDataset | None = None,
          return_estimator: bool = False):
    """Train one model and score it on both splits after every epoch."""
    from ..estimators import GMCRegressor

    if data is None:
        data = dataset_for(cfg, seed)
    est = GMCRegressor(**estimator_params(cfg, seed))
    start = time.perf_counter()
    est.fit(data.X_train, data.y_train,
            eval_set=[(data.X_train, data.y_train), (data.X_test, data.y_test)],
            eval_names=["train", "test"])
    elapsed = time.perf_counter() - start
    ev = est.evals_result_
    report = TrainReport(
        seed=seed,
        epochs=cfg.training.epochs,
        loss=list(est.history_["loss"]),
        train_srocc=ev["train"]["srocc"],
        train_plcc=ev["train"]["plcc"],
        test_srocc=ev["test"]["srocc"],
        test_plcc=ev["test"]["plcc"],
        queue_capacity=est.queue_capacity_,
        config=cfg.to_dict(),
        final={
            "train_srocc": ev["train"]["srocc"][-1],
            "train_plcc": ev["train"]["plcc"][-1],
            "test_srocc": ev["test"]["srocc"][-1],
            "test_plcc": ev["test"]["plcc"][-1],
            "loss": est.history_["loss"][-1],
            "epochs_to_srocc_0.8": epochs_to_reach(ev["test"]["srocc"]),
        },
        wall_clock_s=elapsed,
    )
    return (report, est) if return_estimator else report


def curves_rows(report: TrainReport) -> list[dict]:
    """One row per epoch, for CSV export."""
    return [
        {"epoch": i + 1, "loss": report.loss[i],
         "train_srocc": report.train_srocc[i], "train_plcc": report.train_plcc[i],
         "test_srocc": report.test_srocc[i], "test_plcc": report.test_plcc[i]}
        for i in range(report.epochs)
    ]
