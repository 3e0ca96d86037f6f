"""Networks the benchmark can train, sharing a ``parameters()`` / ``__call__`` surface."""
from __future__ import annotations

import numpy as np

from .. import numgrad as ng
from ..monet import MoNet, MoNetConfig
from ..numgrad import Tensor


class MLP:
    """Dense tanh network ``d -> hidden... -> 1``."""

    def __init__(self, n_features: int, hidden=(32, 16), seed=0):
        rng = np.random.default_rng(seed)
        sizes = [n_features, *hidden, 1]
        self.layers = [
            (Tensor(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)), requires_grad=True),
             Tensor(np.zeros(fan_out), requires_grad=True))
            for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
        ]

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer]

    def __call__(self, x) -> Tensor:
        h = ng.as_tensor(x)
        last = len(self.layers) - 1
        for i, (w, b) in enumerate(self.layers):
            h = ng.bias_add(ng.matmul(h, w), b)
            if i < last:
                h = ng.tanh(h)
        return ng.reshape(h, (h.shape[0],))


class MoNetRegressor:
    """Feeds each flat feature row to :class:`MoNet` as a ``(C, d_in)`` patch grid."""

    def __init__(self, cfg: MoNetConfig, seed=0, use_mal: bool = True):
        self.net = MoNet(cfg, seed=seed, use_mal=use_mal)
        self.cfg = cfg

    def parameters(self) -> list[Tensor]:
        return self.net.parameters()

    def __call__(self, x) -> Tensor:
        x = ng.as_tensor(x)
        return self.net(ng.reshape(x, (x.shape[0], self.cfg.C, self.cfg.d_in)))


def default_monet_config(n_features: int, **overrides) -> MoNetConfig:
    """Toy MoNet sized for ``n_features``-wide rows split into 4 tokens."""
    if n_features % 4:
        raise ValueError(f"n_features={n_features} is not divisible into 4 tokens")
    params = dict(C=4, D=8, N=2, M=3, d_in=n_features // 4)
    params.update(overrides)
    return MoNetConfig(**params)


def build_model(kind: str, n_features: int, seed=0, hidden=(32, 16), monet_config: MoNetConfig | None = None):
    if kind == "mlp":
        return MLP(n_features, hidden, seed)
    if kind in ("monet", "monet-nomal"):
        cfg = monet_config or default_monet_config(n_features)
        if cfg.C * cfg.d_in != n_features:
            raise ValueError(f"MoNet config C*d_in={cfg.C * cfg.d_in} does not match {n_features} features")
        return MoNetRegressor(cfg, seed, use_mal=(kind == "monet"))
    raise ValueError(f"unknown model kind {kind!r}")
