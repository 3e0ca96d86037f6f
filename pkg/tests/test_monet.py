import numpy as np
import pytest

from gmcloss import numgrad as ng
from gmcloss.monet import (ConvBlock, MoNet, MoNetConfig, channel_attention, init_mal_weights,
                           mal_forward, mal_weight_cosine_similarity, monet_forward, self_attention,
                           vit_stub_features)
from gmcloss.numgrad import ShapeError, Tensor

SMALL = MoNetConfig(C=4, D=4, N=2, M=2, d_in=3, head_channels=(3, 2, 2), head_hidden=4)


def reference_attention(x, q, k, v):
    """Row-by-row attention written with plain numpy loops."""
    qx, kx, vx = x @ q, x @ k, x @ v
    out = np.empty_like(vx)
    for i in range(x.shape[0]):
        logits = kx @ qx[i] / np.sqrt(q.shape[0])
        w = np.exp(logits - logits.max())
        out[i] = (w / w.sum()) @ vx
    return out


def test_self_attention_matches_loop_reference(rng):
    w = init_mal_weights(5, 1, 0).levels[0]
    x = rng.normal(size=(7, 5))
    out, attn = self_attention(x, w, return_weights=True)
    assert np.allclose(out.data, reference_attention(x, w.q.data, w.k.data, w.v.data), atol=1e-13)
    assert np.allclose(attn.data.sum(axis=-1), 1.0, atol=1e-12)


def test_self_attention_is_permutation_equivariant(rng):
    w = init_mal_weights(4, 1, 1).levels[0]
    x = rng.normal(size=(6, 4))
    perm = rng.permutation(6)
    assert np.allclose(self_attention(x[perm], w).data, self_attention(x, w).data[perm], atol=1e-13)


@pytest.mark.parametrize("c,d,n,m", [(4, 4, 2, 1), (16, 8, 4, 3), (4, 8, 4, 5)])
def test_shapes(c, d, n, m, rng):
    cfg = MoNetConfig(C=c, D=d, N=n, M=m, d_in=5)
    net = MoNet(cfg, seed=0)
    x = rng.normal(size=(3, c, 5))
    feats = vit_stub_features(x, cfg, projections=net.projections)
    assert [f.shape for f in feats] == [(3, c, d)] * n
    assert mal_forward(feats, net.opinions[0]).shape == (3, d, n)
    assert [o.shape for o in net.opinion_features(x)] == [(3, d, n)] * m
    assert net(x).shape == (3,)
    assert net(x[0]).shape == ()
    assert np.allclose(net(x).data[1], net(x[1]).data, atol=1e-12)


def test_end_to_end_gradients(rng):
    net = MoNet(SMALL, seed=3)
    x = rng.normal(size=(SMALL.C, SMALL.d_in))
    assert ng.check_params(lambda ps: net(x), net.parameters(), eps=1e-6) < 1e-6
    assert ng.finite_difference_check(lambda t: net(t), x, eps=1e-6) < 1e-6


def test_conv_block_gradients_and_shape(rng):
    block = ConvBlock(3, 2, np.random.default_rng(0))
    feats = [Tensor(rng.normal(size=(4, 3))) for _ in range(2)]
    assert block(feats).shape == (3, 2)
    assert ng.check_params(lambda ps: ng.sum_(block(feats)), block.parameters(), eps=1e-6) < 1e-6


def test_nomal_variant_runs_and_differs(rng):
    x = rng.normal(size=(2, SMALL.C, SMALL.d_in))
    with_mal, without = MoNet(SMALL, seed=1), MoNet(SMALL, seed=1, use_mal=False)
    assert without(x).shape == (2,)
    assert len(without.parameters()) != len(with_mal.parameters())


def test_seeding():
    a, b = MoNet(SMALL, seed=7), MoNet(SMALL, seed=7)
    assert all(np.array_equal(p.data, q.data) for p, q in zip(a.parameters(), b.parameters()))
    c = MoNet(SMALL, seed=np.random.SeedSequence(7))
    assert len(c.parameters()) == len(a.parameters())


def test_independent_mals_are_nearly_orthogonal():
    mals = [init_mal_weights(8, 4, s) for s in np.random.SeedSequence(11).spawn(4)]
    assert mals[0].flat().size >= 1000
    for i in range(4):
        assert mal_weight_cosine_similarity(mals[i], mals[i]) == pytest.approx(1.0)
        for j in range(i + 1, 4):
            assert abs(mal_weight_cosine_similarity(mals[i], mals[j])) < 0.1


def test_channel_attention_gain_scales_output(rng):
    x = rng.normal(size=(3, 6))
    one = channel_attention(x, Tensor(1.0)).data
    assert np.allclose(channel_attention(x, Tensor(2.5)).data, 2.5 * one)


def test_errors(rng):
    with pytest.raises(ValueError):
        MoNetConfig(C=0)
    with pytest.raises(ValueError):
        MoNetConfig(head_channels=(1, 2))
    net = MoNet(SMALL, seed=0)
    with pytest.raises(ShapeError):
        net(rng.normal(size=(SMALL.C + 1, SMALL.d_in)))
    feats = vit_stub_features(rng.normal(size=(SMALL.C, SMALL.d_in)), SMALL, projections=net.projections)
    with pytest.raises(ShapeError):
        mal_forward(feats[:1], net.opinions[0])
    with pytest.raises(ShapeError):
        mal_weight_cosine_similarity(init_mal_weights(4, 2, 0), init_mal_weights(4, 3, 0))
    with pytest.raises(ShapeError):
        monet_forward(np.zeros((SMALL.C, SMALL.d_in)), MoNetConfig(), net)
