"""Self-verification checks shared by ``gmcloss check`` and the test suite.

Each check returns a :class:`CheckResult` carrying the measured worst-case
value next to its threshold, so a report shows how much headroom there is
and not just a bit.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numgrad as ng
from .corrmetrics import pearson, spearman
from .gccloss import LossConfig, gmc_loss, mse_loss, pgcc_loss, pgcc_mse_identity_residual, sgcc_loss
from .monet import (MoNet, MoNetConfig, init_mal_weights, mal_forward, mal_weight_cosine_similarity,
                    self_attention, vit_stub_features)
from .rankest import estimate_ranks
from .scorequeue import ScoreQueue


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}: {self.value:.3g} vs {self.threshold:.3g}{extra} [{self.seconds:.2f}s]"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_identity(instances_per_size: int = 25, sizes=(2, 8, 64, 256), seed: int = 0) -> CheckResult:
    """Correlation losses equal n/2 times the MSE of normalised vectors."""
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    for n in sizes:
        for _ in range(instances_per_size):
            p, g = rng.normal(size=n), rng.normal(size=n)
            worst = max(worst, pgcc_mse_identity_residual(p, g))
            count += 1
    return CheckResult("pgcc/sgcc scaled-MSE identity", worst < 1e-10, worst, 1e-10,
                       f"{count} instances, n in {list(sizes)}")


def _gradient_cases(rng, count: int):
    queue_p, queue_g = rng.normal(size=20), rng.normal(size=20)
    cfg = LossConfig()
    losses = {
        "mse": lambda g: (lambda p: mse_loss(p, g)),
        "pgcc": lambda g: (lambda p: pgcc_loss(p, g)),
        "sgcc": lambda g: (lambda p: sgcc_loss(p, g)),
        "gmc+queue": lambda g: (lambda p: gmc_loss(p, g, (queue_p, queue_g), cfg)),
    }
    per_loss = -(-count // len(losses))
    for name, make in losses.items():
        for _ in range(per_loss):
            n = int(rng.integers(3, 13))
            yield name, make(rng.normal(size=n)), rng.normal(size=n)


@_timed
def check_gradients(count: int = 100, seed: int = 1, eps: float = 1e-5) -> CheckResult:
    """Analytic loss gradients against central finite differences."""
    rng = np.random.default_rng(seed)
    worst, worst_name, done = 0.0, "", 0
    for name, f, x in _gradient_cases(rng, count):
        err = ng.finite_difference_check(f, x, eps)
        done += 1
        if err > worst:
            worst, worst_name = err, name
    return CheckResult("loss gradients vs finite differences", worst < 1e-6, worst, 1e-6,
                       f"{done} inputs, worst on {worst_name or 'none'}")


@_timed
def check_rank_properties(count: int = 1000, n: int = 32, seed: int = 2) -> CheckResult:
    """Order preservation, sum, reflection and affine invariance of the rank proxy."""
    rng = np.random.default_rng(seed)
    order_fail, sum_err, refl_err, affine_err, corr_gap = 0, 0.0, 0.0, 0.0, 0.0
    for _ in range(count):
        p = rng.permutation(n) + rng.uniform(-0.4, 0.4, size=n)  # strictly distinct
        sigma = estimate_ranks(p).sigma.data
        if not np.array_equal(np.argsort(sigma, kind="stable"), np.argsort(p, kind="stable")):
            order_fail += 1
        sum_err = max(sum_err, abs(sigma.sum() - n / 2))
        refl_err = max(refl_err, np.max(np.abs(estimate_ranks(-p).sigma.data - (1 - sigma))))
        a, c = rng.uniform(0.1, 10.0), rng.normal(scale=5.0)
        affine_err = max(affine_err, np.max(np.abs(estimate_ranks(a * p + c).sigma.data - sigma)))
        # reported only: how far a PLCC of rank proxies sits from the exact SROCC
        g = p + rng.normal(scale=n / 4, size=n)
        corr_gap = max(corr_gap, abs(pearson(sigma, estimate_ranks(g).sigma.data) - spearman(p, g)))
    passed = order_fail == 0 and sum_err < 1e-10 and refl_err < 1e-12 and affine_err < 1e-12
    detail = (f"{count} vectors: order mismatches {order_fail}, sum err {sum_err:.1e}, "
              f"reflection err {refl_err:.1e}, affine err {affine_err:.1e}; "
              f"max |PLCC(proxies) - SROCC| {corr_gap:.3f} (reported, not asserted)")
    return CheckResult("rank proxy properties", passed, max(sum_err, refl_err, affine_err), 1e-12, detail)


@_timed
def check_queue(sequences: int = 10_000, seed: int = 3) -> CheckResult:
    """Ring buffer contents against a truncated Python-list model."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(sequences):
        k = int(rng.integers(1, 16))
        queue, model = ScoreQueue(k), []
        for _ in range(int(rng.integers(1, 8))):
            b = int(rng.integers(0, 2 * k + 2))
            preds, gts = rng.normal(size=b), rng.normal(size=b)
            queue.push_batch(preds, gts)
            model = (model + list(zip(preds, gts)))[-k:]
            got_p, got_g = queue.snapshot()
            if len(queue) != len(model) or list(zip(got_p, got_g)) != model:
                mismatches += 1
                break
    return CheckResult("queue vs list model", mismatches == 0, float(mismatches), 0.0,
                       f"{sequences} random push sequences")


@_timed
def check_mal_diversity(inits: int = 1000, counts=(3, 4, 5), seed: int = 4,
                        bound: float = 0.1, required: float = 0.99) -> CheckResult:
    """Independently seeded MAL weights are nearly orthogonal."""
    cfg = MoNetConfig()
    dim = init_mal_weights(cfg.D, cfg.N, 0).flat().size
    root = np.random.SeedSequence(seed)
    worst_rate, worst_m = 1.0, None
    for m in counts:
        ok = 0
        for init_seq in root.spawn(inits):
            mals = [init_mal_weights(cfg.D, cfg.N, s) for s in init_seq.spawn(m)]
            flats = np.stack([w.flat() for w in mals])
            flats /= np.linalg.norm(flats, axis=1, keepdims=True)
            cos = flats @ flats.T
            if np.all(np.abs(cos[~np.eye(m, dtype=bool)]) < bound):
                ok += 1
        rate = ok / inits
        if rate < worst_rate or worst_m is None:
            worst_rate, worst_m = rate, m
    return CheckResult("MAL weight diversity", worst_rate >= required and dim >= 1000, worst_rate, required,
                       f"fraction of inits with all |cos| < {bound}; worst M={worst_m}; dim {dim}")


def _expected_ok(fn: Callable, expected: tuple) -> bool:
    try:
        return tuple(fn().shape) == expected
    except Exception:
        return False


@_timed
def check_monet(seed: int = 5) -> CheckResult:
    """Shape contracts over a config sweep, softmax normalisation and an end-to-end gradient check."""
    failures = []
    softmax_err = 0.0
    rng = np.random.default_rng(seed)
    for c in (4, 16):
        for d in (4, 8):
            for n in (2, 4):
                for m in range(1, 6):
                    cfg = MoNetConfig(C=c, D=d, N=n, M=m, d_in=6)
                    net = MoNet(cfg, seed=int(rng.integers(1 << 31)))
                    x = rng.normal(size=(2, c, cfg.d_in))
                    feats = vit_stub_features(x, cfg, projections=net.projections)
                    checks = {
                        "stub": all(f.shape == (2, c, d) for f in feats),
                        "mal": _expected_ok(lambda: mal_forward(feats, net.opinions[0]), (2, d, n)),
                        "opinions": len(net.opinion_features(x)) == m,
                        "batched": _expected_ok(lambda: net(x), (2,)),
                        "single": _expected_ok(lambda: net(x[0]), ()),
                    }
                    failures += [f"{k}@C{c}D{d}N{n}M{m}" for k, ok in checks.items() if not ok]
                    _, attn = self_attention(feats[0], net.opinions[0].levels[0], return_weights=True)
                    softmax_err = max(softmax_err, float(np.max(np.abs(attn.data.sum(axis=-1) - 1.0))))
    cfg = MoNetConfig(C=4, D=4, N=2, M=2, d_in=3, head_channels=(3, 2, 2), head_hidden=4)
    net = MoNet(cfg, seed=seed)
    x = np.random.default_rng(seed + 1).normal(size=(cfg.C, cfg.d_in))
    params = net.parameters()
    sub = np.random.default_rng(seed + 2)
    coords = {i: sub.choice(p.data.size, size=min(3, p.data.size), replace=False) for i, p in enumerate(params)}
    grad_err = ng.check_params(lambda ps: net(x), params, eps=1e-6, coords=coords)
    input_err = ng.finite_difference_check(lambda t: net(t), x, eps=1e-6)
    worst = max(grad_err, input_err)
    passed = not failures and softmax_err < 1e-12 and worst < 1e-6
    detail = (f"shape failures {failures[:3] or 0}, softmax row err {softmax_err:.1e}, "
              f"param grad err {grad_err:.1e}, input grad err {input_err:.1e}")
    return CheckResult("MoNet integrity", passed, worst, 1e-6, detail)


@_timed
def check_worked_values() -> CheckResult:
    """Hand-computable reference values."""
    sigma = estimate_ranks(np.array([0.0, 1.0])).sigma.data
    rank_err = float(np.max(np.abs(sigma - [0.2893248, 0.7106752])))
    plcc_err = abs(pearson([1, 2, 3], [1, 3, 2]) - 0.5)
    gmc_err = abs(gmc_loss(np.array([1.0, 2.0, 3.0]), np.array([1.0, 3.0, 2.0]), None,
                           LossConfig(0.5, 0.5, 1.0)).item() - 1.0)
    passed = rank_err < 1e-6 and plcc_err < 1e-12 and gmc_err < 1e-10
    return CheckResult("worked values", passed, max(rank_err, plcc_err, gmc_err), 1e-6,
                       f"rank err {rank_err:.1e}, plcc err {plcc_err:.1e}, gmc err {gmc_err:.1e}")


CHECKS = {
    "identity": check_identity,
    "gradients": check_gradients,
    "rank-properties": check_rank_properties,
    "queue": check_queue,
    "mal-diversity": check_mal_diversity,
    "monet": check_monet,
    "worked-values": check_worked_values,
}


def run_checks(names=None) -> list[CheckResult]:
    results = []
    for name in names or CHECKS:
        try:
            results.append(CHECKS[name]())
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(name, False, float("nan"), float("nan"), f"raised {exc!r}"))
    return results
