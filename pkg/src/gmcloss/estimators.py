"""scikit-learn compatible wrappers.

:class:`GMCRegressor` trains one of the benchmark networks with the GMC (or
plain MSE) objective and plugs into pipelines, ``clone`` and grid search.
:class:`RankProxyTransformer` exposes the differentiable rank proxy as a
stateless column transformer.
"""
from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y, validate_data

from . import numgrad as ng
from .corrmetrics import DegenerateInputError, pearson, spearman
from .gccloss import LossConfig, gmc_loss, mse_loss
from .rankest import estimate_ranks
from .scorequeue import ScoreQueue, capacity_from_ratio
from .synthbench.models import build_model

logger = logging.getLogger(__name__)

LOSSES = ("mse", "gmc")


def _safe_metric(fn, pred, y) -> float:
    try:
        return fn(pred, y)
    except DegenerateInputError:
        return float("nan")


class GMCRegressor(RegressorMixin, BaseEstimator):
    """Neural regressor trained with ``[a*PGCC + b*SGCC + g] * MSE``.

    Parameters
    ----------
    model : {"mlp", "monet", "monet-nomal"}
        Network to train. ``monet-nomal`` replaces the opinion MALs with
        convolution blocks.
    loss : {"gmc", "mse"}
    alpha, beta, gamma : float
        GMC weights. ``alpha = beta = 0`` reduces GMC to ``gamma * MSE``.
    queue_ratio : float
        Queue capacity as a fraction of the training-set size; 0 disables
        the queue (correlation terms then see the current batch only).
    epochs, batch_size : int
        Batches are drawn from a fresh permutation every epoch; the
        incomplete tail batch is dropped.
    lr, weight_decay : float
        Adam step size and decoupled weight decay.
    lr_period : int
        Cosine-annealing period in epochs (restarts afterwards).
    hidden : tuple of int
        MLP hidden widths.
    monet_config : MoNetConfig or None
    scale_target : bool
        Standardise ``y`` with training mean/std before fitting; predictions
        are mapped back to the original scale.
    random_state : int

    Attributes
    ----------
    history_ : dict
        ``loss`` (mean batch loss per epoch) and ``queue_len`` (per step).
    evals_result_ : dict
        Per-epoch ``srocc``/``plcc`` for each ``eval_set`` entry.
    """

    def __init__(self, model="mlp", loss="gmc", alpha=0.5, beta=0.5, gamma=1.0, queue_ratio=0.6,
                 epochs=60, batch_size=11, lr=1e-3, weight_decay=1e-5, lr_period=30,
                 hidden=(32, 16), monet_config=None, scale_target=True, random_state=0):
        self.model = model
        self.loss = loss
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.queue_ratio = queue_ratio
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.lr_period = lr_period
        self.hidden = hidden
        self.monet_config = monet_config
        self.scale_target = scale_target
        self.random_state = random_state

    def _validate_params(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.queue_ratio <= 1.0:
            raise ValueError("queue_ratio must lie in [0, 1]")

    def fit(self, X, y, eval_set=None, eval_names=None):
        """Train from scratch.

        ``eval_set`` is an optional list of ``(X, y)`` pairs scored with exact
        SROCC/PLCC after every epoch, stored under ``eval_names`` (default
        ``"valid_0"``, ``"valid_1"``...) in ``evals_result_``.
        """
        self._validate_params()
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        n = X.shape[0]
        if n < 2 and self.loss == "gmc":
            raise ValueError("GMC training needs at least 2 samples")
        self.n_features_in_ = X.shape[1]
        init_seed, shuffle_seed = np.random.SeedSequence(self.random_state).spawn(2)
        shuffle_rng = np.random.default_rng(shuffle_seed)

        if self.scale_target:
            sd = float(np.std(y))
            self.y_mean_, self.y_scale_ = float(np.mean(y)), sd if sd > 0 else 1.0
        else:
            self.y_mean_, self.y_scale_ = 0.0, 1.0
        yt = (y - self.y_mean_) / self.y_scale_

        self.net_ = build_model(self.model, self.n_features_in_, init_seed, tuple(self.hidden),
                                self.monet_config)
        params = self.net_.parameters()
        state = ng.AdamState.for_params(params)
        cfg = LossConfig(self.alpha, self.beta, self.gamma)
        queue = None
        if self.loss == "gmc" and self.queue_ratio > 0:
            queue = ScoreQueue(capacity_from_ratio(self.queue_ratio, n))
        self.queue_capacity_ = 0 if queue is None else queue.capacity

        eval_set = list(eval_set or [])
        names = list(eval_names or [f"valid_{i}" for i in range(len(eval_set))])
        if len(names) != len(eval_set):
            raise ValueError("eval_names must match eval_set in length")
        checked = [check_X_y(ex, ey, dtype=np.float64, y_numeric=True) for ex, ey in eval_set]
        self.evals_result_ = {name: {"srocc": [], "plcc": []} for name in names}
        self.history_ = {"loss": [], "queue_len": [], "lr": []}

        steps_per_epoch = max(1, n // self.batch_size)
        for epoch in range(self.epochs):
            lr = ng.cosine_annealing_lr(epoch, self.lr_period, self.lr)
            self.history_["lr"].append(lr)
            order = shuffle_rng.permutation(n)
            total = 0.0
            for step in range(steps_per_epoch):
                idx = order[step * self.batch_size:(step + 1) * self.batch_size]
                pred = self.net_(ng.Tensor(X[idx]))
                target = yt[idx]
                if self.loss == "gmc":
                    loss = gmc_loss(pred, target, queue, cfg)
                else:
                    loss = mse_loss(pred, target)
                ng.backward(loss)
                if lr > 0:
                    ng.adam_step(params, [p.grad for p in params], state, lr, self.weight_decay)
                for p in params:
                    p.zero_grad()
                if queue is not None:
                    queue.push_batch(pred.data, target)
                self.history_["queue_len"].append(0 if queue is None else len(queue))
                total += loss.item()
            self.history_["loss"].append(total / steps_per_epoch)
            for name, (ex, ey) in zip(names, checked):
                pe = self._predict_scaled(ex)
                self.evals_result_[name]["srocc"].append(_safe_metric(spearman, pe, ey))
                self.evals_result_[name]["plcc"].append(_safe_metric(pearson, pe, ey))
            logger.debug("epoch %d loss %.6g", epoch + 1, self.history_["loss"][-1])
        return self

    def _predict_scaled(self, X, chunk: int = 4096) -> np.ndarray:
        out = []
        with ng.no_grad():
            for start in range(0, X.shape[0], chunk):
                out.append(self.net_(ng.Tensor(X[start:start + chunk])).data)
        return np.concatenate(out) if out else np.empty(0)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self._predict_scaled(X) * self.y_scale_ + self.y_mean_

    def score(self, X, y, sample_weight=None) -> float:
        """SROCC between predictions and ``y`` (NaN if predictions are constant)."""
        if sample_weight is not None:
            raise ValueError("sample_weight is not supported")
        return _safe_metric(spearman, self.predict(X), np.asarray(y, dtype=np.float64))


class RankProxyTransformer(TransformerMixin, BaseEstimator):
    """Replace each column with its differentiable rank proxy (values in (0, 1)).

    ``scale="rank"`` multiplies by the number of rows, which puts the values
    on the same footing as 1-based ranks (they sum to ``n^2 / 2``).
    """

    def __init__(self, method="auto", scale="unit"):
        self.method = method
        self.scale = scale

    def fit(self, X, y=None):
        validate_data(self, X, dtype=np.float64, ensure_min_samples=2)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        if self.scale not in ("unit", "rank"):
            raise ValueError(f"scale must be 'unit' or 'rank', got {self.scale!r}")
        if X.shape[0] == 1:
            out = np.full(X.shape, 0.5)  # a lone score is compared only with itself
        else:
            out = np.column_stack([estimate_ranks(X[:, j], self.method).sigma.data for j in range(X.shape[1])])
        return out * X.shape[0] if self.scale == "rank" else out
