"""Command line entry point.

    nndoa gen-data <config> <out.csv> [--split train|test]
    nndoa train    <config> <data.csv> <model.json>
    nndoa music    <config> <data.csv> <report-dir>
    nndoa eval     <model.json> <data.csv> <report-dir>
    nndoa compare  <config> <out-dir>

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from ..errors import ConfigurationError, DomainError, NumericError, ShapeError
from ..features import Dataset
from ..neural.io import load_model, save_model
from .experiment import (ExperimentConfig, fit_estimator, make_report, make_test_set, make_train_set,
                         predict_model, run_experiment, run_music, write_reports)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

logger = logging.getLogger("nndoa")


def _load_config(path, seed):
    cfg = ExperimentConfig.load(path)
    if seed is not None:
        cfg = replace(cfg, seed=seed, nn=replace(cfg.nn, seed=seed))
    return cfg


def _load_data(path):
    try:
        return Dataset.load(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigurationError(f"cannot read dataset {path}: {exc}") from None


def cmd_gen_data(args):
    cfg = _load_config(args.config, args.seed)
    data = make_train_set(cfg) if args.split == "train" else make_test_set(cfg, args.snr)
    data.save(args.out)
    logger.info("wrote %d samples to %s", len(data), args.out)


def cmd_train(args):
    cfg = _load_config(args.config, args.seed)
    est = args.estimator or next((e for e in cfg.estimators if e != "music"), None)
    if est is None:
        raise ConfigurationError("config selects no trainable estimator")
    save_model(fit_estimator(est, _load_data(args.data), cfg), args.model_out)


def cmd_music(args):
    cfg = _load_config(args.config, args.seed)
    data = _load_data(args.data)
    pred, merged = run_music(data, cfg.music_resolution_deg)
    write_reports([make_report("music", data.labels, pred, merged)], args.report_out,
                  {"resolution_deg": cfg.music_resolution_deg, "dataset_seed": data.seed})


def cmd_eval(args):
    try:
        model = load_model(args.model)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigurationError(f"cannot read model {args.model}: {exc}") from None
    data = _load_data(args.data)
    pred = predict_model(model, data.features, args.mc_samples, args.seed or 0)
    write_reports([make_report(args.series, data.labels, pred)], args.report_out,
                  {"model": str(args.model), "dataset_seed": data.seed})


def cmd_compare(args):
    cfg = _load_config(args.config, args.seed)
    for r in run_experiment(cfg, args.out_dir):
        s = r.summary
        print(f"{r.series:>24s}  median {s['median']:.3f} deg  mean {s['mean']:.3f}  p90 {s['p90']:.3f}")


def build_parser():
    p = argparse.ArgumentParser(prog="nndoa", description="ULA direction finding: MUSIC vs neural networks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, *positional, help=None):
        sp = sub.add_parser(name, help=help)
        for arg in positional:
            sp.add_argument(arg)
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.set_defaults(func=func)
        return sp

    g = add("gen-data", cmd_gen_data, "config", "out", help="synthesize a dataset CSV + JSON sidecar")
    g.add_argument("--split", choices=("train", "test"), default="train")
    g.add_argument("--snr", type=float, default=None, help="test-split SNR (default: first in config)")
    t = add("train", cmd_train, "config", "data", "model_out", help="train a neural estimator")
    t.add_argument("--estimator", choices=("mlp", "rbf-mlp", "bnn", "scheme"), default=None)
    add("music", cmd_music, "config", "data", "report_out", help="run MUSIC on a dataset")
    e = add("eval", cmd_eval, "model", "data", "report_out", help="evaluate a saved model")
    e.add_argument("--mc-samples", type=int, default=100)
    e.add_argument("--series", default="model")
    add("compare", cmd_compare, "config", "out_dir", help="full experiment: data, training, reports")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigurationError, ShapeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
