import json
import math

import numpy as np
import pytest

from gmcloss.corrmetrics import spearman
from gmcloss.scorequeue import capacity_from_ratio
from gmcloss.synthbench import (ConfigError, ExperimentConfig, build_model, config_from_dict,
                                epochs_to_reach, generate_dataset, load_config, run_suite, suite_arms,
                                train)
from gmcloss.synthbench import suites as suites_mod
from gmcloss.synthbench.train import curves_rows, estimator_params

TINY = ExperimentConfig().replace(**{"dataset.n": 120, "dataset.d": 8, "training.epochs": 3,
                                     "training.hidden": (8,), "training.batch_size": 10})


def test_dataset_invariants_and_determinism():
    ds = generate_dataset(2500, 16, 5.0, seed=3)
    assert ds.X_train.shape == (2000, 16) and ds.X_test.shape == (500, 16)
    assert np.intersect1d(ds.train_idx, ds.test_idx).size == 0
    assert np.all((ds.mos >= 0) & (ds.mos <= 100))
    assert ds.latent_mos.min() == pytest.approx(0.0, abs=1e-12)
    assert ds.latent_mos.max() == pytest.approx(100.0, abs=1e-12)
    again = generate_dataset(2500, 16, 5.0, seed=3)
    assert np.array_equal(ds.mos, again.mos) and np.array_equal(ds.train_idx, again.train_idx)
    assert not np.array_equal(ds.mos, generate_dataset(2500, 16, 5.0, seed=4).mos)


def test_noise_free_labels_equal_latent():
    ds = generate_dataset(50, 4, 0.0, seed=0)
    assert np.array_equal(ds.mos, ds.latent_mos)


@pytest.mark.parametrize("kwargs", [dict(n=5, d=3, noise_std=1.0), dict(n=50, d=0, noise_std=1.0),
                                    dict(n=50, d=3, noise_std=-1.0)])
def test_dataset_validation(kwargs):
    with pytest.raises(ValueError):
        generate_dataset(seed=0, **kwargs)


def test_config_round_trip_and_strictness(tmp_path):
    cfg = ExperimentConfig().replace(**{"optimizer.lr": 1e-4, "monet.M": 4})
    assert config_from_dict(cfg.to_dict()) == cfg
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"training": {"epochs": 5}, "seeds": [1, 2, 3]}))
    loaded = load_config(path)
    assert loaded.training.epochs == 5 and loaded.seeds == (1, 2, 3)
    for bad in ({"bogus": 1}, {"training": {"epochz": 1}}, {"seeds": "0"},
                {"training": {"loss_kind": "l1"}}, {"queue_ratio": 2.0}, {"dataset": []}):
        with pytest.raises(ConfigError):
            config_from_dict(bad)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_loss_kind_mapping():
    p = estimator_params(TINY.replace(**{"training.loss_kind": "pgcc-only"}), 0)
    assert (p["alpha"], p["beta"], p["loss"]) == (0.5, 0.0, "gmc")
    p = estimator_params(TINY.replace(**{"training.loss_kind": "sgcc-only"}), 0)
    assert (p["alpha"], p["beta"]) == (0.0, 0.5)
    assert estimator_params(TINY.replace(**{"training.loss_kind": "no-queue"}), 0)["queue_ratio"] == 0.0
    assert estimator_params(TINY.replace(**{"training.loss_kind": "mse"}), 0)["loss"] == "mse"


def test_train_is_deterministic_and_well_formed():
    a, b = train(TINY, 5), train(TINY, 5)
    assert a.loss == b.loss and a.test_srocc == b.test_srocc
    assert len(a.loss) == len(a.test_srocc) == 3
    assert a.queue_capacity == capacity_from_ratio(0.6, 96) == 57
    assert len(curves_rows(a)) == 3
    json.dumps(a.to_dict(), allow_nan=False)


def test_queue_length_follows_steps():
    report, est = train(TINY, 0, return_estimator=True)
    steps = np.arange(1, len(est.history_["queue_len"]) + 1)
    expected = np.minimum(steps * TINY.training.batch_size, report.queue_capacity)
    assert np.array_equal(est.history_["queue_len"], expected)


def test_no_queue_equals_gmc_with_zero_ratio():
    a = train(TINY.replace(**{"training.loss_kind": "no-queue"}), 2)
    b = train(TINY.replace(queue_ratio=0.0), 2)
    assert a.loss == b.loss and a.test_srocc == b.test_srocc
    assert a.queue_capacity == 0


def test_mse_learns_a_noise_free_teacher():
    cfg = ExperimentConfig().replace(**{"dataset.n": 1000, "dataset.noise_std": 0.0,
                                        "training.loss_kind": "mse", "training.epochs": 20})
    report = train(cfg, 0)
    assert report.final["train_srocc"] >= 0.95
    assert report.loss[-1] < report.loss[0]


def test_monet_model_trains():
    cfg = TINY.replace(**{"training.model": "monet", "training.epochs": 1})
    assert math.isfinite(train(cfg, 0).loss[0])
    with pytest.raises(ValueError):
        build_model("monet", 10)
    with pytest.raises(ValueError):
        build_model("cnn", 8)


def test_epochs_to_reach():
    assert epochs_to_reach([0.1, 0.85, 0.9]) == 2.0
    assert epochs_to_reach([float("nan"), 0.8]) == 2.0
    assert epochs_to_reach([0.5, 0.6]) == math.inf


def test_suite_arm_sets():
    names = lambda kind, base=TINY: [a.name for a in suite_arms(kind, base)]
    assert names("loss-compare") == ["mse", "gmc"]
    assert len(names("lr-sweep")) == 6
    assert names("mal-sweep") == [f"M={m}" for m in range(1, 6)]
    ablation = suite_arms("ablation", TINY)
    assert {a.name for a in ablation} == {"full", "w/o SGCC", "w/o PGCC", "w/o GCC", "w/o queue", "w/o MAL"}
    assert next(a for a in ablation if a.name == "w/o MAL").config is None
    monet_base = TINY.replace(**{"training.model": "monet"})
    nomal = next(a for a in suite_arms("ablation", monet_base) if a.name == "w/o MAL")
    assert nomal.config.training.model == "monet-nomal"
    with pytest.raises(ValueError):
        suite_arms("grid", TINY)


def test_run_suite_aggregates_medians():
    report = run_suite("loss-compare", TINY, seeds=[0, 1, 2], keep_reports=True)
    for name in ("mse", "gmc"):
        arm = report["arms"][name]
        finals = [r.final["test_srocc"] for r in report["_reports"][name]]
        assert arm["status"] == "ok"
        assert arm["final"]["test_srocc"]["median"] == pytest.approx(float(np.median(finals)))
        assert arm["per_seed_final_test_srocc"] == finals
        assert len(arm["median_curves"]["loss"]) == TINY.training.epochs


def test_failed_arm_is_recorded(monkeypatch):
    real = suites_mod.train

    def flaky(cfg, seed):
        if cfg.training.loss_kind == "gmc":
            raise RuntimeError("boom")
        return real(cfg, seed)

    monkeypatch.setattr(suites_mod, "train", flaky)
    report = run_suite("loss-compare", TINY, seeds=[0, 1, 2])
    assert report["arms"]["gmc"]["status"] == "failed"
    assert "boom" in report["arms"]["gmc"]["errors"][0]
    assert report["arms"]["mse"]["status"] == "ok"


def test_lr_grid_worst_is_lowest_mse_median():
    arms = {}
    for lr, mse, gmc in ((1e-4, 0.9, 0.91), (1e-5, 0.7, 0.8), (1e-6, 0.75, 0.6)):
        for kind, value in (("mse", mse), ("gmc", gmc)):
            arms[f"lr={lr:g}/{kind}"] = {"status": "ok", "final": {"test_srocc": {"median": value}}}
    summary = suites_mod.lr_grid_summary(arms)
    assert summary["worst_lr"] == 1e-5
    assert summary["grid"]["1e-06"] == {"mse": 0.75, "gmc": 0.6}


def test_ranking_quality_improves_with_training():
    ds = generate_dataset(400, 8, 0.0, seed=1)
    cfg = TINY.replace(**{"dataset.n": 400, "dataset.noise_std": 0.0, "training.epochs": 8})
    report = train(cfg, 1, data=ds)
    assert report.test_srocc[-1] > report.test_srocc[0]
    assert spearman(ds.latent_mos, ds.mos) == pytest.approx(1.0, abs=1e-12)


def test_suite_cache_reuses_runs(monkeypatch):
    cache = {}
    first = run_suite("loss-compare", TINY, seeds=[0, 1, 2], cache=cache)
    assert len(cache) == 6

    def forbidden(cfg, seed):
        raise AssertionError("should have been served from the cache")

    monkeypatch.setattr(suites_mod, "train", forbidden)
    again = run_suite("loss-compare", TINY, seeds=[0, 1, 2], cache=cache)
    assert again["arms"] == first["arms"]
