"""Multi-arm, multi-seed experiment suites and their aggregation."""
from __future__ import annotations

import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, SUITES
from .train import TrainReport, _jsonable, train

logger = logging.getLogger(__name__)

LR_GRID = (1e-4, 1e-5, 1e-6)
QUEUE_RATIOS = (0.2, 0.4, 0.6, 0.8)
MAL_COUNTS = (1, 2, 3, 4, 5)
ABLATION_ARMS = ("full", "w/o SGCC", "w/o PGCC", "w/o GCC", "w/o queue", "w/o MAL")
MIN_COMPARATIVE_SEEDS = 3


@dataclass(frozen=True)
class Arm:
    name: str
    config: ExperimentConfig | None
    skip_reason: str | None = None


def _with_kind(cfg: ExperimentConfig, kind: str) -> ExperimentConfig:
    return cfg.replace(**{"training.loss_kind": kind})


def suite_arms(kind: str, base: ExperimentConfig) -> list[Arm]:
    """Expand a suite kind into its named arms."""
    if kind == "loss-compare":
        return [Arm(k, _with_kind(base, k)) for k in ("mse", "gmc")]
    if kind == "lr-sweep":
        return [Arm(f"lr={lr:g}/{k}", _with_kind(base, k).replace(**{"optimizer.lr": lr}))
                for lr in LR_GRID for k in ("mse", "gmc")]
    if kind == "queue-sweep":
        gmc = _with_kind(base, "gmc")
        return [Arm(f"queue={r:g}", gmc.replace(queue_ratio=r)) for r in QUEUE_RATIOS]
    if kind == "mal-sweep":
        arms = []
        for m in MAL_COUNTS:
            cfg = base.replace(**{"monet.M": m, "training.model": "monet"})
            arms.append(Arm(f"M={m}", cfg))
        return arms
    if kind == "ablation":
        arms = [
            Arm("full", _with_kind(base, "gmc")),
            Arm("w/o SGCC", _with_kind(base, "pgcc-only")),
            Arm("w/o PGCC", _with_kind(base, "sgcc-only")),
            Arm("w/o GCC", _with_kind(base, "mse")),
            Arm("w/o queue", _with_kind(base, "no-queue")),
        ]
        if base.training.model == "mlp":
            arms.append(Arm("w/o MAL", None, "base model has no MAL modules"))
        else:
            arms.append(Arm("w/o MAL", _with_kind(base, "gmc").replace(**{"training.model": "monet-nomal"})))
        return arms
    raise ValueError(f"unknown suite kind {kind!r}; expected one of {SUITES}")


def _run_one(job):
    cfg, seed = job
    try:
        return train(cfg, seed), None
    except Exception:  # an arm crash must not take the suite down
        return None, traceback.format_exc()


def _summary(values) -> dict:
    vals = np.asarray([v for v in values if v is not None and not math.isnan(v)], dtype=np.float64)
    if vals.size == 0:
        return {"median": math.nan, "q25": math.nan, "q75": math.nan, "min": math.nan, "max": math.nan}
    q25, med, q75 = np.percentile(vals, [25, 50, 75])
    return {"median": float(med), "q25": float(q25), "q75": float(q75),
            "min": float(vals.min()), "max": float(vals.max())}


def aggregate_arm(reports: list[TrainReport]) -> dict:
    """Median/spread of final metrics plus per-epoch median curves."""
    finals = {key: _summary([r.final[key] for r in reports])
              for key in ("test_srocc", "test_plcc", "train_srocc", "train_plcc")}
    # inf (never reached) is a legitimate order statistic here, so no NaN filtering
    reach = [r.final["epochs_to_srocc_0.8"] for r in reports]
    curves = {key: np.nanmedian(np.array([getattr(r, key) for r in reports], dtype=np.float64), axis=0).tolist()
              for key in ("loss", "test_srocc", "test_plcc", "train_srocc")}
    return {
        "final": finals,
        "epochs_to_srocc_0.8": {"median": float(np.median(reach)), "per_seed": reach},
        "median_curves": curves,
        "per_seed_final_test_srocc": [r.final["test_srocc"] for r in reports],
    }


def run_suite(kind: str, base: ExperimentConfig, seeds=None, n_jobs: int = 1,
              keep_reports: bool = False, cache: dict | None = None) -> dict:
    """Run every arm of ``kind`` for each seed and aggregate per arm.

    Arms that crash are recorded with ``status="failed"`` and the traceback;
    the remaining arms still run. Training is deterministic in
    ``(config, seed)``, so a ``cache`` dict keyed that way lets several suites
    share runs (e.g. the ablation's "full" arm and loss-compare's "gmc" arm).
    """
    seeds = list(base.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("run_suite needs at least one seed")
    if len(seeds) < MIN_COMPARATIVE_SEEDS:
        logger.warning("suite %s uses %d seed(s); comparative claims need >= %d",
                       kind, len(seeds), MIN_COMPARATIVE_SEEDS)
    arms = suite_arms(kind, base)
    jobs = [(arm.config, seed) for arm in arms if arm.config is not None for seed in seeds]
    cache = {} if cache is None else cache
    todo = list(dict.fromkeys(job for job in jobs if job not in cache))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            done = list(pool.map(_run_one, todo))
    else:
        done = [_run_one(job) for job in todo]
    fresh = dict(zip(todo, done))
    cache.update((job, rep) for job, (rep, err) in fresh.items() if err is None)
    results = [(cache[job], None) if job in cache else fresh[job] for job in jobs]

    out_arms, raw = {}, {}
    cursor = 0
    for arm in arms:
        if arm.config is None:
            out_arms[arm.name] = {"status": "skipped", "reason": arm.skip_reason}
            continue
        chunk = results[cursor:cursor + len(seeds)]
        cursor += len(seeds)
        errors = [err for _, err in chunk if err is not None]
        reports = [rep for rep, _ in chunk if rep is not None]
        if errors:
            logger.error("arm %s failed for %d seed(s)", arm.name, len(errors))
            out_arms[arm.name] = {"status": "failed", "errors": errors}
            continue
        entry = {"status": "ok", "config": arm.config.to_dict(), **aggregate_arm(reports)}
        out_arms[arm.name] = entry
        raw[arm.name] = reports
    report = {"suite": kind, "seeds": seeds, "arms": out_arms,
              "base_config": base.to_dict()}
    if kind == "lr-sweep":
        report["lr_grid"] = lr_grid_summary(out_arms)
    report = _jsonable(report)
    if keep_reports:
        report["_reports"] = raw
    return report


def lr_grid_summary(arms: dict) -> dict:
    """3x2 grid of median final test SROCC and the worst learning rate.

    The worst learning rate is the one where the MSE arm's median is lowest
    (ties go to the smaller learning rate).
    """
    grid = {}
    for lr in LR_GRID:
        row = {}
        for kind in ("mse", "gmc"):
            arm = arms.get(f"lr={lr:g}/{kind}", {})
            row[kind] = arm.get("final", {}).get("test_srocc", {}).get("median", math.nan) \
                if arm.get("status") == "ok" else math.nan
        grid[f"{lr:g}"] = row
    finite = [(row["mse"], float(lr)) for lr, row in grid.items() if not math.isnan(row["mse"])]
    worst = min(finite)[1] if finite else None
    return {"grid": grid, "worst_lr": worst}
