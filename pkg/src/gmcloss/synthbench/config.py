"""Experiment configuration: strict JSON loading with documented defaults."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..gccloss import LossConfig
from ..monet import MoNetConfig
from .models import default_monet_config

LOSS_KINDS = ("mse", "gmc", "pgcc-only", "sgcc-only", "no-queue")
MODELS = ("mlp", "monet", "monet-nomal")
SUITES = ("loss-compare", "lr-sweep", "queue-sweep", "mal-sweep", "ablation")


class ConfigError(ValueError):
    """Malformed or unknown experiment-configuration content."""


@dataclass(frozen=True)
class DatasetConfig:
    n: int = 2500
    d: int = 16
    noise_std: float = 5.0
    teacher_hidden: int = 32


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-5
    lr_period: int = 30


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 60
    batch_size: int = 11
    model: str = "mlp"
    loss_kind: str = "gmc"
    hidden: tuple = (32, 16)


@dataclass(frozen=True)
class ExperimentConfig:
    loss: LossConfig = field(default_factory=LossConfig)
    monet: MoNetConfig | None = None
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    queue_ratio: float = 0.6
    seeds: tuple = (0, 1, 2, 3, 4)
    suite: str = "loss-compare"

    def __post_init__(self):
        if self.training.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"training.loss_kind must be one of {LOSS_KINDS}")
        if self.training.model not in MODELS:
            raise ConfigError(f"training.model must be one of {MODELS}")
        if self.suite not in SUITES:
            raise ConfigError(f"suite must be one of {SUITES}")
        if not 0.0 <= self.queue_ratio <= 1.0:
            raise ConfigError("queue_ratio must lie in [0, 1]")
        if self.training.epochs < 1 or self.training.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.optimizer.lr <= 0 or self.optimizer.lr_period < 1:
            raise ConfigError("optimizer.lr must be positive and lr_period >= 1")
        if self.dataset.n < 10 or self.dataset.d < 1 or self.dataset.noise_std < 0:
            raise ConfigError("dataset needs n >= 10, d >= 1, noise_std >= 0")

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with top-level fields or dotted section fields (``"optimizer.lr"``) changed."""
        top, nested = {}, {}
        for key, value in changes.items():
            section, _, name = key.partition(".")
            if name:
                nested.setdefault(section, {})[name] = value
            else:
                top[key] = value
        for section, values in nested.items():
            current = getattr(self, section)
            if current is None and section == "monet":
                current = default_monet_config(self.dataset.d)
            top[section] = dataclasses.replace(current, **values)
        return dataclasses.replace(self, **top)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self)))


_SECTIONS = {
    "loss": LossConfig,
    "monet": MoNetConfig,
    "dataset": DatasetConfig,
    "optimizer": OptimizerConfig,
    "training": TrainingConfig,
}
_TUPLE_FIELDS = {"hidden", "head_channels"}


def _section(cls, raw, name):
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {sorted(unknown)}")
    values = {k: tuple(v) if k in _TUPLE_FIELDS else v for k, v in raw.items()}
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r}: {exc}") from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = None if (key == "monet" and value is None) else _section(_SECTIONS[key], value, key)
        elif key == "seeds":
            if not isinstance(value, list) or not all(isinstance(s, int) for s in value):
                raise ConfigError("seeds must be a list of integers")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)
