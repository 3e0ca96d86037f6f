"""Toy-scale mean-opinion network built on :mod:`gmcloss.numgrad`.

Shapes (leading batch axes are allowed everywhere and written ``...``):

* input patches ``(..., C, d_in)``
* per-level stub features ``N x (..., C, D)``
* one multi-view attention learning (MAL) module maps them to an opinion
  feature ``(..., D, N)``
* ``M`` opinions feed a regression MAL with ``M`` levels over ``D`` tokens of
  width ``N``, giving ``(..., N, M)``, then a transformer block, three 1-D
  convolutions over the ``N`` axis and two dense layers to a score.

The backbone is a frozen random linear projection per level, not a
pretrained ViT.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import numgrad as ng
from .numgrad import ShapeError, Tensor


@dataclass(frozen=True)
class MoNetConfig:
    C: int = 16
    D: int = 8
    N: int = 4
    M: int = 3
    d_in: int = 8
    head_channels: tuple = (8, 4, 2)
    head_hidden: int = 8

    def __post_init__(self):
        for name in ("C", "D", "N", "M", "d_in", "head_hidden"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"MoNetConfig.{name} must be a positive integer, got {value!r}")
        if len(self.head_channels) != 3 or min(self.head_channels) < 1:
            raise ValueError("head_channels needs three positive widths")


class SAWeights(NamedTuple):
    q: Tensor
    k: Tensor
    v: Tensor


def _normal(rng, shape, fan_in) -> Tensor:
    return Tensor(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape), requires_grad=True)


def init_sa_weights(dim: int, rng) -> SAWeights:
    return SAWeights(*(_normal(rng, (dim, dim), dim) for _ in range(3)))


@dataclass
class MalWeights:
    """Per-level SA projections, the pixel-branch SA, and the channel-branch gain.

    The channel branch attends over ``D`` tokens whose features are the
    flattened ``(C, N)`` grid; it uses the raw features as queries, keys and
    values (no projections), scaled by a learnable gain.
    """

    levels: list
    pixel: SAWeights
    channel_gain: Tensor

    @property
    def tokens_dim(self) -> int:
        return self.levels[0].q.shape[0]

    def parameters(self) -> list[Tensor]:
        params = [w for sa in self.levels for w in sa]
        params.extend(self.pixel)
        params.append(self.channel_gain)
        return params

    def flat(self) -> np.ndarray:
        return np.concatenate([p.data.ravel() for p in self.parameters()])


def init_mal_weights(dim: int, levels: int, rng) -> MalWeights:
    """Random MAL weights for ``levels`` inputs of embedding width ``dim``."""
    rng = np.random.default_rng(rng)
    return MalWeights(
        levels=[init_sa_weights(dim, rng) for _ in range(levels)],
        pixel=init_sa_weights(dim * levels, rng),
        channel_gain=Tensor(rng.normal(), requires_grad=True),
    )


def stub_projections(cfg: MoNetConfig, seed) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.normal(0.0, 1.0 / np.sqrt(cfg.d_in), size=(cfg.d_in, cfg.D)) for _ in range(cfg.N)]


def vit_stub_features(x, cfg: MoNetConfig, seed=None, projections=None) -> list[Tensor]:
    """``N`` frozen random linear views of the ``(..., C, d_in)`` input."""
    x = ng.as_tensor(x)
    if x.ndim < 2 or x.shape[-2:] != (cfg.C, cfg.d_in):
        raise ShapeError(f"expected input (..., {cfg.C}, {cfg.d_in}), got {x.shape}")
    if projections is None:
        projections = stub_projections(cfg, seed)
    return [ng.matmul(x, Tensor(p)) for p in projections]


def self_attention(x, w: SAWeights, return_weights: bool = False):
    """``softmax(Q K^T / sqrt(E)) V`` over the token axis of ``(..., T, E)``."""
    x = ng.as_tensor(x)
    e = w.q.shape[0]
    if x.ndim < 2 or x.shape[-1] != e:
        raise ShapeError(f"self_attention: input width {x.shape[-1:]} does not match weights {e}")
    q, k, v = ng.matmul(x, w.q), ng.matmul(x, w.k), ng.matmul(x, w.v)
    attn = ng.softmax(ng.matmul(q, ng.transpose(k)) * (1.0 / np.sqrt(e)), axis=-1)
    out = ng.matmul(attn, v)
    return (out, attn) if return_weights else out


def channel_attention(x, gain: Tensor) -> Tensor:
    x = ng.as_tensor(x)
    attn = ng.softmax(ng.matmul(x, ng.transpose(x)) * (1.0 / np.sqrt(x.shape[-1])), axis=-1)
    return ng.matmul(attn, x) * gain


def _stack_levels(features: Sequence[Tensor]) -> Tensor:
    return ng.concat([ng.reshape(f, f.shape + (1,)) for f in features], axis=-1)


def mal_forward(features: Sequence, w: MalWeights) -> Tensor:
    """One MAL: ``N x (..., C, D)`` level features to an opinion ``(..., D, N)``."""
    features = [ng.as_tensor(f) for f in features]
    n_levels = len(w.levels)
    if len(features) != n_levels:
        raise ShapeError(f"MAL expects {n_levels} level features, got {len(features)}")
    shape = features[0].shape
    if len(shape) < 2 or shape[-1] != w.tokens_dim or any(f.shape != shape for f in features):
        raise ShapeError(f"MAL level features must share shape (..., C, {w.tokens_dim})")
    *lead, c, d = shape
    lead = tuple(lead)
    stacked = _stack_levels([self_attention(f, sa) for f, sa in zip(features, w.levels)])

    pixel = ng.reshape(stacked, lead + (c, d * n_levels))
    pixel = ng.reshape(self_attention(pixel, w.pixel), lead + (c, d, n_levels))

    nl = len(lead)
    swap = tuple(range(nl)) + (nl + 1, nl, nl + 2)  # (..., C, D, N) <-> (..., D, C, N)
    channel = ng.reshape(ng.permute(stacked, swap), lead + (d, c * n_levels))
    channel = ng.reshape(channel_attention(channel, w.channel_gain), lead + (d, c, n_levels))
    channel = ng.permute(channel, swap)

    return ng.mean(pixel + channel, axis=-3)


def mal_weight_cosine_similarity(w_i: MalWeights, w_j: MalWeights) -> float:
    a, b = w_i.flat(), w_j.flat()
    if a.shape != b.shape:
        raise ShapeError(f"MAL weights differ in size: {a.size} vs {b.size}")
    return float(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0))


# --- regression head ---------------------------------------------------------------


def conv1d(x, weight: Tensor, bias: Tensor, kernel: int) -> Tensor:
    """Zero-padded 'same' convolution over axis -2 of ``(..., L, C_in)``."""
    x = ng.as_tensor(x)
    *lead, length, c_in = x.shape
    if weight.shape[0] != kernel * c_in:
        raise ShapeError(f"conv1d weight {weight.shape} does not fit kernel {kernel} x {c_in} channels")
    pad = kernel // 2
    zeros = Tensor(np.zeros(tuple(lead) + (pad, c_in)))
    padded = ng.concat([zeros, x, zeros], axis=-2) if pad else x
    windows = np.arange(length)[:, None] + np.arange(kernel)[None, :]
    cols = ng.reshape(ng.take(padded, windows, axis=-2), tuple(lead) + (length, kernel * c_in))
    return ng.bias_add(ng.matmul(cols, weight), bias)


def dense(x, weight: Tensor, bias: Tensor) -> Tensor:
    return ng.bias_add(ng.matmul(x, weight), bias)


class ConvBlock:
    """Three-convolution stand-in for a MAL (for the MAL ablation)."""

    def __init__(self, dim: int, levels: int, rng):
        width = dim * levels
        self.dim, self.levels = dim, levels
        self.layers = [(_normal(rng, (3 * width, width), 3 * width),
                        Tensor(np.zeros(width), requires_grad=True)) for _ in range(3)]

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer]

    def __call__(self, features: Sequence[Tensor]) -> Tensor:
        h = _stack_levels(features)
        *lead, c, d, n = h.shape
        h = ng.reshape(h, tuple(lead) + (c, d * n))
        for w, b in self.layers:
            h = ng.tanh(conv1d(h, w, b, 3))
        return ng.reshape(ng.mean(h, axis=-2), tuple(lead) + (d, n))


class MoNet:
    """Toy MoNet. ``use_mal=False`` swaps every opinion MAL for a :class:`ConvBlock`."""

    def __init__(self, cfg: MoNetConfig = MoNetConfig(), seed=0, use_mal: bool = True):
        self.cfg = cfg
        self.use_mal = use_mal
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seeds = root.spawn(cfg.M + 3)
        self.projections = stub_projections(cfg, seeds[0])
        if use_mal:
            self.opinions = [init_mal_weights(cfg.D, cfg.N, s) for s in seeds[1:cfg.M + 1]]
        else:
            self.opinions = [ConvBlock(cfg.D, cfg.N, np.random.default_rng(s)) for s in seeds[1:cfg.M + 1]]
        self.fusion = init_mal_weights(cfg.N, cfg.M, seeds[cfg.M + 1])
        rng = np.random.default_rng(seeds[cfg.M + 2])
        m, hidden = cfg.M, 2 * cfg.M
        self.block_sa = init_sa_weights(m, rng)
        self.block_ffn = [(_normal(rng, (m, hidden), m), Tensor(np.zeros(hidden), requires_grad=True)),
                          (_normal(rng, (hidden, m), hidden), Tensor(np.zeros(m), requires_grad=True))]
        self.convs = []
        c_in = m
        for kernel, c_out in zip((5, 3, 3), cfg.head_channels):
            self.convs.append((kernel, _normal(rng, (kernel * c_in, c_out), kernel * c_in),
                               Tensor(np.zeros(c_out), requires_grad=True)))
            c_in = c_out
        flat = cfg.N * c_in
        self.fcs = [(_normal(rng, (flat, cfg.head_hidden), flat),
                     Tensor(np.zeros(cfg.head_hidden), requires_grad=True)),
                    (_normal(rng, (cfg.head_hidden, 1), cfg.head_hidden),
                     Tensor(np.zeros(1), requires_grad=True))]

    def parameters(self) -> list[Tensor]:
        params = [p for op in self.opinions for p in op.parameters()]
        params += self.fusion.parameters()
        params += list(self.block_sa)
        params += [p for layer in self.block_ffn for p in layer]
        params += [p for _, w, b in self.convs for p in (w, b)]
        params += [p for layer in self.fcs for p in layer]
        return params

    def opinion_features(self, x) -> list[Tensor]:
        feats = vit_stub_features(x, self.cfg, projections=self.projections)
        if self.use_mal:
            return [mal_forward(feats, w) for w in self.opinions]
        return [block(feats) for block in self.opinions]

    def forward(self, x) -> Tensor:
        """Quality score for ``(C, d_in)`` input (scalar) or ``(B, C, d_in)`` (shape ``(B,)``)."""
        x = ng.as_tensor(x)
        lead = x.shape[:-2]
        z = mal_forward(self.opinion_features(x), self.fusion)  # (..., N, M)
        z = z + self_attention(z, self.block_sa)
        (w1, b1), (w2, b2) = self.block_ffn
        z = z + dense(ng.tanh(dense(z, w1, b1)), w2, b2)
        for kernel, w, b in self.convs:
            z = ng.tanh(conv1d(z, w, b, kernel))
        z = ng.reshape(z, lead + (1, z.shape[-2] * z.shape[-1]))
        (f1, c1), (f2, c2) = self.fcs
        score = dense(ng.tanh(dense(z, f1, c1)), f2, c2)
        return ng.reshape(score, lead)

    __call__ = forward


def monet_forward(x, cfg: MoNetConfig, model: MoNet) -> Tensor:
    if model.cfg != cfg:
        raise ShapeError("model was built for a different MoNetConfig")
    return model.forward(x)
