"""Experiment configs and the end-to-end NN vs MUSIC evaluation run."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..array_signal import ArrayConfig, SpacingPerturbation
from ..errors import ConfigurationError
from ..features import (Dataset, close_pair_angles, config_from_dict, config_to_dict,
                        features_to_covariance, generate_dataset)
from ..music import music_from_covariance
from ..neural.bnn import BnnModel, predict_bnn, train_bnn
from ..neural.io import save_model
from ..neural.mlp import MlpModel, TrainConfig, forward, kfold_train, train
from ..schemes import Scheme, SchemeSpec, predict_scheme, train_scheme
from .metrics import ecdf, matched_errors, summarize

logger = logging.getLogger(__name__)

ESTIMATORS = ("music", "mlp", "rbf-mlp", "bnn", "scheme")
TEST_SEED_OFFSET = 10_000_000
PERTURBATION_SEED_OFFSET = 20_000_000
DEFAULT_RBF_UNITS = 100


@dataclass
class ExperimentConfig:
    """Everything needed to regenerate data, train and evaluate.

    ``test_snr_db`` may list several values; each yields its own series on a
    test set sharing angles and source draws across SNRs.
    """

    array: ArrayConfig = field(default_factory=ArrayConfig.half_wavelength)
    num_sources: int = 2
    snr_db: float = 20.0
    source_power: float = 1.0
    signal_kind: str = "complex_gaussian"
    perturbation: dict | None = None
    train_samples: int = 4000
    test_samples: int = 2000
    test_snr_db: list = field(default_factory=lambda: [20.0])
    max_separation_deg: float | None = None
    estimators: list = field(default_factory=lambda: ["music", "mlp"])
    music_resolution_deg: float = 0.01
    nn: TrainConfig = field(default_factory=TrainConfig)
    kfold: int | None = None
    rbf_units: int = DEFAULT_RBF_UNITS
    bnn: dict = field(default_factory=lambda: {"epochs": 600, "mc_samples": 1, "likelihood_std": 0.02,
                                                "predict_samples": 100})
    scheme: str = "joint"
    seed: int = 0
    name: str = "experiment"

    def __post_init__(self):
        for est in self.estimators:
            if est not in ESTIMATORS:
                raise ConfigurationError(f"unknown estimator {est!r}; choose from {ESTIMATORS}")
        if self.num_sources >= self.array.num_antennas:
            raise ConfigurationError("num_sources must be smaller than num_antennas")
        if self.train_samples < 1 or self.test_samples < 1:
            raise ConfigurationError("dataset sizes must be positive")
        self.test_snr_db = [float(s) for s in np.atleast_1d(self.test_snr_db)]

    @property
    def train_seed(self) -> int:
        return self.seed

    @property
    def test_seed(self) -> int:
        return self.seed + TEST_SEED_OFFSET

    def spacing_perturbation(self) -> SpacingPerturbation | None:
        p = self.perturbation
        if not p:
            return None
        if "epsilon" in p:
            return SpacingPerturbation(tuple(p["epsilon"]))
        if "uniform_fraction" in p:
            return SpacingPerturbation.uniform(self.array, p["uniform_fraction"],
                                               p.get("seed", self.seed + PERTURBATION_SEED_OFFSET))
        raise ConfigurationError("perturbation needs 'epsilon' or 'uniform_fraction'")

    def train_config(self) -> TrainConfig:
        return self.nn

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"estimator"}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "estimator" in d:
            d["estimators"] = [d.pop("estimator")]
        if "array" in d:
            d["array"] = config_from_dict(d["array"])
        if "nn" in d:
            try:
                d["nn"] = TrainConfig(**d["nn"])
            except TypeError as exc:
                raise ConfigurationError(f"bad nn config: {exc}") from None
        if "bnn" in d:
            d["bnn"] = {**cls().bnn, **d["bnn"]}
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, ArrayConfig):
                v = config_to_dict(v)
            elif isinstance(v, TrainConfig):
                v = {g.name: (list(getattr(v, g.name)) if g.name == "hidden_sizes" else getattr(v, g.name))
                     for g in fields(v)}
            out[f.name] = v
        return out

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None


@dataclass
class ErrorReport:
    """Matched errors of one estimator on one test set."""

    series: str
    true: np.ndarray
    pred: np.ndarray
    errors: np.ndarray
    merged: np.ndarray | None = None

    @property
    def sample_errors(self) -> np.ndarray:
        """One error per test sample: the mean of its matched per-angle errors."""
        return self.errors.mean(axis=1)

    @property
    def summary(self) -> dict:
        s = summarize(self.sample_errors)
        if self.merged is not None:
            s["merged_count"] = int(np.sum(self.merged))
        return s

    @property
    def ecdf(self):
        return ecdf(self.sample_errors)


def make_report(series, true, pred, merged=None) -> ErrorReport:
    true, pred = np.atleast_2d(true), np.atleast_2d(pred)
    return ErrorReport(series, true, pred, matched_errors(true, pred),
                       None if merged is None else np.asarray(merged, dtype=bool))


# -- datasets ------------------------------------------------------------------

def make_train_set(cfg: ExperimentConfig, num_samples=None, seed=None) -> Dataset:
    return generate_dataset(cfg.array, num_samples or cfg.train_samples, cfg.num_sources, cfg.snr_db,
                            cfg.train_seed if seed is None else seed, perturbation=cfg.spacing_perturbation(),
                            source_power=cfg.source_power, signal_kind=cfg.signal_kind)


def make_test_set(cfg: ExperimentConfig, snr_db=None, num_samples=None) -> Dataset:
    n = num_samples or cfg.test_samples
    angles = None
    if cfg.max_separation_deg is not None:
        if cfg.num_sources != 2:
            raise ConfigurationError("max_separation_deg applies to two-source scenes only")
        angles = close_pair_angles(n, cfg.max_separation_deg, cfg.test_seed)
    return generate_dataset(cfg.array, n, cfg.num_sources, cfg.test_snr_db[0] if snr_db is None else snr_db,
                            cfg.test_seed, perturbation=cfg.spacing_perturbation(), angles=angles,
                            source_power=cfg.source_power, signal_kind=cfg.signal_kind)


# -- estimators ----------------------------------------------------------------

def fit_estimator(name: str, data: Dataset, cfg: ExperimentConfig):
    """Train the neural estimator ``name``; returns a model object."""
    tc = cfg.train_config()
    if name == "mlp":
        return kfold_train(data, tc, cfg.kfold)[0] if cfg.kfold else train(data, tc)[0]
    if name == "rbf-mlp":
        from dataclasses import replace
        tc = replace(tc, rbf_units=tc.rbf_units or cfg.rbf_units)
        return kfold_train(data, tc, cfg.kfold)[0] if cfg.kfold else train(data, tc)[0]
    if name == "bnn":
        b = cfg.bnn
        return train_bnn(data, tc, b["mc_samples"], epochs=b["epochs"], likelihood_std=b["likelihood_std"])[0]
    if name == "scheme":
        return train_scheme(data, SchemeSpec(cfg.scheme, data.num_sources, tc))
    raise ConfigurationError(f"{name!r} is not a trainable estimator")


def predict_model(model, features, predict_samples=100, seed=0):
    if isinstance(model, MlpModel):
        return np.sort(np.atleast_2d(forward(model, features)), axis=1)
    if isinstance(model, BnnModel):
        return np.sort(np.atleast_2d(predict_bnn(model, features, predict_samples, seed)[0]), axis=1)
    if isinstance(model, Scheme):
        return predict_scheme(model, features)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def run_music(data: Dataset, resolution_deg=0.01, config: ArrayConfig | None = None):
    """MUSIC on every sample, using the covariance recovered from its features."""
    config = config or data.config
    preds = np.empty_like(data.labels)
    merged = np.zeros(len(data), dtype=bool)
    for i, f in enumerate(data.features):
        res = music_from_covariance(features_to_covariance(f), data.num_sources, config, resolution_deg)
        preds[i], merged[i] = res.angles, res.merged
    return preds, merged


# -- output files --------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def _series_slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_reports(reports: list[ErrorReport], out_dir, extra_summary: dict | None = None) -> None:
    """Write report.csv, scatter.csv, ecdf_<series>.csv and summary.json.

    All ECDF files are evaluated on one shared error axis (the sorted union of
    every series' errors) so they can be plotted against each other.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = reports[0].true.shape[1]
    with open(out / "report.csv", "w") as fh:
        cols = ([f"true{i}" for i in range(k)] + [f"pred{i}" for i in range(k)]
                + [f"err{i}" for i in range(k)] + ["sample_err"])
        fh.write(",".join(["series", "sample"] + cols + ["merged"]) + "\n")
        for r in reports:
            for j in range(len(r.true)):
                vals = [_fmt(v) for v in (*r.true[j], *r.pred[j], *r.errors[j], r.sample_errors[j])]
                merged = "" if r.merged is None else str(int(r.merged[j]))
                fh.write(",".join([r.series, str(j)] + vals + [merged]) + "\n")
    with open(out / "scatter.csv", "w") as fh:
        fh.write("series,sample,angle_index,true_deg,pred_deg\n")
        for r in reports:
            for j in range(len(r.true)):
                for i in range(k):
                    fh.write(f"{r.series},{j},{i},{_fmt(r.true[j, i])},{_fmt(r.pred[j, i])}\n")
    axis = np.unique(np.concatenate([r.sample_errors for r in reports]))
    for r in reports:
        cdf = r.ecdf.on(axis)
        with open(out / f"ecdf_{_series_slug(r.series)}.csv", "w") as fh:
            fh.write("error_deg,cdf\n")
            for x, f in zip(axis, cdf):
                fh.write(f"{_fmt(x)},{_fmt(f)}\n")
    summary = {"series": {r.series: r.summary for r in reports}}
    summary.update(extra_summary or {})
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# -- driver --------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, out_dir=None, *, train_data: Dataset | None = None,
                   test_data: dict | None = None) -> list[ErrorReport]:
    """Generate data, train each neural estimator, evaluate everything.

    ``test_data`` may map SNR to a prepared test set. Reports are written to
    ``out_dir`` when given. The run is a pure function of ``cfg``.
    """
    neural = [e for e in cfg.estimators if e != "music"]
    if neural and train_data is None:
        train_data = make_train_set(cfg)
    test_data = test_data or {}
    tests = {snr: test_data[snr] if snr in test_data else make_test_set(cfg, snr) for snr in cfg.test_snr_db}
    multi = len(tests) > 1
    models = {e: fit_estimator(e, train_data, cfg) for e in neural}

    reports = []
    for snr, data in tests.items():
        suffix = f"@snr{snr:g}" if multi else ""
        for est in cfg.estimators:
            if est == "music":
                pred, merged = run_music(data, cfg.music_resolution_deg)
                reports.append(make_report(est + suffix, data.labels, pred, merged))
            else:
                pred = predict_model(models[est], data.features, cfg.bnn["predict_samples"], cfg.seed)
                reports.append(make_report(est + suffix, data.labels, pred))
        logger.info("evaluated %d estimators at %g dB", len(cfg.estimators), snr)

    if out_dir is not None:
        pert = cfg.spacing_perturbation()
        write_reports(reports, out_dir, {
            "config": cfg.to_dict(),
            "seeds": {"train": cfg.train_seed, "test": cfg.test_seed, "nn": cfg.nn.seed},
            "perturbation": None if pert is None else list(pert.epsilon),
        })
        for est, m in models.items():
            save_model(m, Path(out_dir) / f"model_{_series_slug(est)}.json")
    return reports
