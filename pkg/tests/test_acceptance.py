"""Acceptance criteria, one test each, with a PASS/FAIL line printed per criterion.

Tolerances and sizes are the pinned acceptance values; the experiment
criteria (5-7) run the benchmark at its default configuration with five
seeds and compare medians. They are reported honestly: a red result here
reflects the measured outcome, not a harness problem.
"""
import time

import pytest

from gmcloss import verify
from gmcloss.synthbench import ExperimentConfig, run_suite

SEEDS = (0, 1, 2, 3, 4)


def emit(capsys, number: int, passed: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")


@pytest.fixture(scope="session")
def bench():
    """Shared run cache so arms that coincide across suites train once."""
    return {"base": ExperimentConfig(seeds=SEEDS), "cache": {}, "suites": {}}


def suite(bench, kind):
    if kind not in bench["suites"]:
        start = time.perf_counter()
        report = run_suite(kind, bench["base"], cache=bench["cache"])
        bench["suites"][kind] = (report, time.perf_counter() - start)
    return bench["suites"][kind]


def median(report, arm):
    entry = report["arms"][arm]
    assert entry["status"] == "ok", f"arm {arm} did not run: {entry}"
    return entry["final"]["test_srocc"]["median"]


def test_criterion_01_identity(capsys):
    r = verify.check_identity(instances_per_size=25, sizes=(2, 8, 64, 256))
    ok = r.passed and r.value < 1e-10 and r.seconds < 5.0
    emit(capsys, 1, ok, f"max residual {r.value:.2e} < 1e-10 over 100 instances in {r.seconds:.2f}s (< 5s)")
    assert ok


def test_criterion_02_gradients(capsys):
    r = verify.check_gradients(count=100)
    ok = r.passed and r.value < 1e-6 and r.seconds < 30.0
    emit(capsys, 2, ok, f"max relative error {r.value:.2e} < 1e-6, {r.detail}, {r.seconds:.2f}s (< 30s)")
    assert ok


def test_criterion_03_rank_properties(capsys):
    r = verify.check_rank_properties(count=1000, n=32)
    ok = r.passed and r.seconds < 10.0
    emit(capsys, 3, ok, f"{r.detail}, {r.seconds:.2f}s (< 10s)")
    assert ok


def test_criterion_04_queue(capsys):
    r = verify.check_queue(sequences=10_000)
    emit(capsys, 4, r.passed, f"{int(r.value)} mismatches in 10000 sequences")
    assert r.passed


@pytest.mark.slow
def test_criterion_05_loss_compare(bench, capsys):
    report, seconds = suite(bench, "loss-compare")
    gmc, mse = median(report, "gmc"), median(report, "mse")
    reach_gmc = report["arms"]["gmc"]["epochs_to_srocc_0.8"]["median"]
    reach_mse = report["arms"]["mse"]["epochs_to_srocc_0.8"]["median"]
    ok = gmc >= mse and reach_gmc <= reach_mse and seconds < 300
    emit(capsys, 5, ok, f"median test SROCC gmc {gmc:.6f} vs mse {mse:.6f}; "
                        f"epochs to 0.8 gmc {reach_gmc:g} vs mse {reach_mse:g}; {seconds:.0f}s (< 300s)")
    assert gmc >= mse, "GMC median final test SROCC below MSE"
    assert reach_gmc <= reach_mse, "GMC needs more epochs to reach SROCC 0.8"
    assert seconds < 300


@pytest.mark.slow
def test_criterion_06_lr_robustness(bench, capsys):
    report, _ = suite(bench, "lr-sweep")
    grid, worst = report["lr_grid"]["grid"], report["lr_grid"]["worst_lr"]
    row = grid[f"{worst:g}"]
    ok = row["gmc"] >= row["mse"]
    table = "; ".join(f"lr={lr}: mse {v['mse']:.4f} gmc {v['gmc']:.4f}" for lr, v in grid.items())
    emit(capsys, 6, ok, f"worst lr {worst:g}: gmc {row['gmc']:.6f} vs mse {row['mse']:.6f} | grid {table}")
    assert ok


@pytest.mark.slow
def test_criterion_07_ablation(bench, capsys):
    suite(bench, "loss-compare")  # lets "full" and "w/o GCC" reuse those runs
    report, _ = suite(bench, "ablation")
    full = median(report, "full")
    others = {arm: median(report, arm) for arm in ("w/o PGCC", "w/o SGCC", "w/o GCC", "w/o queue")}
    beaten = {arm: v for arm, v in others.items() if v > full}
    ok = not beaten
    listing = ", ".join(f"{arm} {v:.6f}" for arm, v in others.items())
    emit(capsys, 7, ok, f"full {full:.6f} vs {listing}")
    assert ok, f"arms above the full GMC arm: {beaten}"


def test_criterion_08_mal_diversity(capsys):
    r = verify.check_mal_diversity(inits=1000, counts=(3, 4, 5))
    emit(capsys, 8, r.passed, f"worst-M pass rate {r.value:.3f} >= 0.99 ({r.detail})")
    assert r.passed


def test_criterion_09_monet_integrity(capsys):
    r = verify.check_monet()
    emit(capsys, 9, r.passed, r.detail)
    assert r.passed


def test_criterion_10_worked_values(capsys):
    r = verify.check_worked_values()
    emit(capsys, 10, r.passed, r.detail)
    assert r.passed
