"""Command-line interface.

Exit codes: 0 success, 1 a verification property failed (or every suite arm
failed), 2 invalid input, 3 degenerate data.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3
SCORE_HEADER = ["id", "pred", "gt"]


class InputError(Exception):
    pass


class DegenerateError(Exception):
    pass


def read_score_file(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Parse an ``id,pred,gt`` CSV, reporting the first bad line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: cannot read ({exc})") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InputError(f"{path}: line 1: empty file, expected header id,pred,gt")
    if [h.strip() for h in rows[0]] != SCORE_HEADER:
        raise InputError(f"{path}: line 1: header must be id,pred,gt, got {','.join(rows[0])}")
    ids, preds, gts, seen = [], [], [], set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise InputError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
        ident = row[0].strip()
        if ident in seen:
            raise InputError(f"{path}: line {lineno}: duplicate id {ident!r}")
        seen.add(ident)
        try:
            p, g = float(row[1]), float(row[2])
        except ValueError:
            raise InputError(f"{path}: line {lineno}: pred and gt must be numbers") from None
        if not (math.isfinite(p) and math.isfinite(g)):
            raise InputError(f"{path}: line {lineno}: non-finite value")
        ids.append(ident)
        preds.append(p)
        gts.append(g)
    if len(ids) < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {len(ids)}")
    return ids, np.array(preds), np.array(gts)


def _constant_columns(preds, gts) -> list[str]:
    return [name for name, col in (("pred", preds), ("gt", gts)) if np.ptp(col) == 0]


def cmd_metrics(args) -> int:
    from .corrmetrics import pearson, spearman

    _, preds, gts = read_score_file(args.score_file)
    constant = _constant_columns(preds, gts)
    if constant:
        raise DegenerateError(f"column(s) {', '.join(constant)} are constant; correlation undefined")
    print(json.dumps({"plcc": pearson(preds, gts), "srocc": spearman(preds, gts), "n": int(preds.size)}))
    return EXIT_OK


def cmd_estimate_ranks(args) -> int:
    from .rankest import estimate_ranks

    ids, preds, gts = read_score_file(args.score_file)
    values = preds if args.column == "pred" else gts
    result = estimate_ranks(values)
    if result.degenerate:
        print(f"warning: column {args.column} is constant; every sigma is 0.5", file=sys.stderr)
    sigma = result.sigma.data
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "sigma"])
    writer.writerows((i, repr(float(s))) for i, s in zip(ids, sigma))
    check = f"sum(sigma) = {sigma.sum():.12g}, n/2 = {sigma.size / 2:g}"
    if args.out:
        Path(args.out).write_text(out.getvalue(), encoding="utf-8")
        print(check)
    else:
        sys.stdout.write(out.getvalue())
        print(check, file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    from .verify import CHECKS, run_checks

    names = args.only or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise InputError(f"unknown check(s) {unknown}; choose from {list(CHECKS)}")
    results = run_checks(names)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILURE if failed else EXIT_OK


def _load_config(path, overrides: dict):
    from .synthbench.config import ConfigError, ExperimentConfig, load_config

    try:
        cfg = load_config(path) if path else ExperimentConfig()
        changes = {k: v for k, v in overrides.items() if v is not None}
        return cfg.replace(**changes) if changes else cfg
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    except (ConfigError, ValueError, TypeError) as exc:
        raise InputError(f"invalid config: {exc}") from exc


def cmd_train(args) -> int:
    from . import reporting
    from .synthbench.train import curves_rows, train

    cfg = _load_config(args.config, {
        "training.loss_kind": args.loss, "queue_ratio": args.queue_ratio,
        "training.epochs": args.epochs, "training.model": args.model,
    })
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    report = train(cfg, seed)
    payload = report.to_dict()
    reporting.validate(payload, "train_report")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_json(out / "report.json", payload)
    rows = curves_rows(report)
    reporting.write_csv(out / "curves.csv", rows, list(rows[0]))
    final = payload["final"]
    print(f"{cfg.training.loss_kind} seed={seed} epochs={cfg.training.epochs}: "
          f"test SROCC {final['test_srocc']} PLCC {final['test_plcc']} ({report.wall_clock_s:.1f}s) -> {out}")
    return EXIT_OK


def cmd_suite(args) -> int:
    from . import reporting
    from .synthbench.suites import MIN_COMPARATIVE_SEEDS, run_suite

    overrides = {"queue_ratio": args.queue_ratio, "training.epochs": args.epochs,
                 "monet.M": args.mal_count}
    if args.seeds is not None:
        overrides["seeds"] = tuple(args.seeds)
    cfg = _load_config(args.config, overrides)
    if len(cfg.seeds) < MIN_COMPARATIVE_SEEDS:
        raise InputError(f"suites need at least {MIN_COMPARATIVE_SEEDS} seeds, got {len(cfg.seeds)}")
    report = run_suite(args.kind, cfg, n_jobs=args.jobs)
    reporting.validate(report, "suite_report")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_json(out / "suite.json", report)
    rows = []
    for name, arm in report["arms"].items():
        if arm["status"] != "ok":
            continue
        curves = arm["median_curves"]
        for i in range(len(curves["loss"])):
            rows.append({"arm": name, "epoch": i + 1, **{k: v[i] for k, v in curves.items()}})
    if rows:
        reporting.write_csv(out / "curves.csv", rows, list(rows[0]))
    statuses = [arm["status"] for arm in report["arms"].values()]
    for name, arm in report["arms"].items():
        if arm["status"] == "ok":
            print(f"{name}: median test SROCC {arm['final']['test_srocc']['median']}")
        else:
            print(f"{name}: {arm['status']}")
    if "lr_grid" in report:
        print(f"worst lr (lowest MSE median): {report['lr_grid']['worst_lr']}")
    ran = [s for s in statuses if s != "skipped"]
    return EXIT_FAILURE if ran and all(s == "failed" for s in ran) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .synthbench.config import LOSS_KINDS, MODELS, SUITES

    parser = argparse.ArgumentParser(prog="gmcloss", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="PLCC/SROCC of an id,pred,gt score file")
    p.add_argument("score_file")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("estimate-ranks", help="differentiable rank proxy of one score column")
    p.add_argument("score_file")
    p.add_argument("--column", choices=("pred", "gt"), default="pred")
    p.add_argument("--out", help="write the id,sigma CSV here instead of stdout")
    p.set_defaults(func=cmd_estimate_ranks)

    p = sub.add_parser("check", help="run the self-verification suite")
    p.add_argument("--only", nargs="+", metavar="NAME", help="subset of checks to run")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("train", help="one training run on the synthetic benchmark")
    p.add_argument("config", nargs="?", help="experiment config JSON (defaults if omitted)")
    p.add_argument("--loss", choices=LOSS_KINDS)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--seed", type=int)
    p.add_argument("--queue-ratio", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("suite", help="multi-seed experiment suite")
    p.add_argument("kind", choices=SUITES)
    p.add_argument("config", nargs="?", help="experiment config JSON (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--queue-ratio", type=float)
    p.add_argument("--mal-count", type=int, help="MAL count M for MoNet arms")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
