"""Simulation benchmark: sweep methods x training sizes over replications.

Each replication draws a fresh population, builds one training pool and one
test set, fits every requested method on nested subsamples of the pool, and
scores the test set on the requested metrics. Replications use independent
child RNG streams of one master seed, so reports are reproducible cell by
cell regardless of execution order.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from effectune.calibration import fit_calibration
from effectune.data import ExperimentDataset
from effectune.ec import fit_ec
from effectune.ee import fit_causal_tree, fit_ee
from effectune.eo import fit_eo
from effectune.metrics import EmptyArmWarning, PolicyConfig, auuc, mse_true, policy_value, topq_actions
from effectune.model import CalibrationStage, FineTuner
from effectune.sim import SimulationParams, draw_dgp, sample_population
from effectune.tree import FitConfig

METHODS = ("BS", "BS_CAL", "CT", "CT_BS", "EE", "EO", "EC")
METRICS = ("mse", "auuc", "policy")


@dataclass
class BenchmarkConfig:
    train_sizes: tuple[int, ...]
    n_reps: int = 100
    test_size: int = 50_000
    methods: tuple[str, ...] = METHODS
    metrics: tuple[str, ...] = METRICS
    sim: SimulationParams = field(default_factory=SimulationParams)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        self.train_sizes = tuple(int(s) for s in self.train_sizes)
        self.methods = tuple(self.methods)
        self.metrics = tuple(self.metrics)
        if not self.train_sizes or min(self.train_sizes) < 1:
            raise ValueError("train_sizes must be nonempty positive integers")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if self.test_size < 1:
            raise ValueError("test_size must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}; expected a subset of {METHODS}")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}; expected a subset of {METRICS}")

    @property
    def pool_size(self) -> int:
        return max(self.train_sizes)

    def to_dict(self) -> dict:
        return {
            "train_sizes": list(self.train_sizes),
            "n_reps": self.n_reps,
            "test_size": self.test_size,
            "methods": list(self.methods),
            "metrics": list(self.metrics),
            "sim": self.sim.to_dict(),
            "policy": {"cost": self.policy.cost, "threshold": self.policy.threshold, "top_fraction": self.policy.top_fraction},
            "fit": self.fit.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown BenchmarkConfig fields: {sorted(unknown)}")
        data = dict(data)
        if "sim" in data:
            data["sim"] = SimulationParams.from_dict(data["sim"])
        if "policy" in data:
            data["policy"] = PolicyConfig(**data["policy"])
        if "fit" in data:
            data["fit"] = FitConfig.from_dict(data["fit"])
        return cls(**data)


@dataclass
class MetricReport:
    """Long-format results: one (method, train_size, rep, metric, value) row
    per evaluated cell, plus the cells skipped because a fit precondition
    failed on that replication's draw."""

    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def sorted_rows(self) -> list:
        return sorted(self.rows, key=lambda r: (r[0], r[1], r[2], r[3]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "train_size", "rep", "metric", "value"])
            for row in self.sorted_rows():
                writer.writerow([row[0], row[1], row[2], row[3], repr(row[4])])

    def mean(self, method: str, train_size: int, metric: str) -> float:
        values = [r[4] for r in self.rows if r[0] == method and r[1] == train_size and r[3] == metric]
        if not values:
            raise KeyError(f"no rows for ({method}, {train_size}, {metric})")
        return float(np.mean(values))

    def improvements(self, baseline: str = "BS") -> list:
        """Per (method, size, metric): mean value and percentage improvement
        over the baseline's mean. Lower is better for mse, higher for the
        rest; the baseline improves on itself by exactly 0."""
        keys = sorted({(r[0], r[1], r[3]) for r in self.rows})
        out = []
        for method, size, metric in keys:
            value = self.mean(method, size, metric)
            try:
                ref = self.mean(baseline, size, metric)
            except KeyError:
                ref = float("nan")
            if not np.isfinite(ref) or ref == 0.0:
                pct = float("nan")
            elif metric == "mse":
                pct = 100.0 * (ref - value) / abs(ref)
            else:
                pct = 100.0 * (value - ref) / abs(ref)
            out.append((method, size, metric, value, pct))
        return out

    def write_summary_csv(self, path, baseline: str = "BS") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "train_size", "metric", "mean_value", "pct_improvement_vs_" + baseline])
            for method, size, metric, value, pct in self.improvements(baseline):
                writer.writerow([method, size, metric, repr(value), repr(pct)])


def fit_method(method: str, d: ExperimentDataset, cfg: FitConfig, cost: float = 0.0) -> FineTuner | None:
    """Fit one benchmark method; None means raw base scores (no model)."""
    if method == "BS":
        return None
    if method == "BS_CAL":
        return FineTuner(
            kind="calibrated",
            stages=[CalibrationStage(fit_calibration(d.base_score, d))],
            feature_names=d.feature_names,
            metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed},
        )
    if method == "CT":
        return fit_causal_tree(d, include_base_as_feature=False, cfg=cfg)
    if method == "CT_BS":
        return fit_causal_tree(d, include_base_as_feature=True, cfg=cfg)
    if method == "EE":
        return fit_ee(d, cfg)
    if method == "EO":
        return fit_eo(d, cfg)
    if method == "EC":
        return fit_ec(d, cfg, cost=cost)
    raise ValueError(f"unknown method {method!r}")


def _policy_actions(scores, policy: PolicyConfig):
    if policy.top_fraction is not None:
        return topq_actions(scores, policy.top_fraction)
    return (scores > policy.threshold).astype(np.float64)


def run_benchmark(cfg: BenchmarkConfig, progress=None) -> MetricReport:
    report = MetricReport()
    master = np.random.SeedSequence(cfg.sim.seed)
    rep_seeds = master.spawn(cfg.n_reps)
    for rep in range(cfg.n_reps):
        dgp_seed, pool_seed, test_seed = rep_seeds[rep].spawn(3)
        dgp = draw_dgp(cfg.sim, np.random.default_rng(dgp_seed))
        pool, _ = sample_population(dgp, cfg.pool_size, np.random.default_rng(pool_seed))
        test, test_truth = sample_population(dgp, cfg.test_size, np.random.default_rng(test_seed))
        for size in cfg.train_sizes:
            train = pool.subset(np.arange(size))
            for method in cfg.methods:
                try:
                    tuner = fit_method(method, train, cfg.fit, cost=cfg.policy.cost)
                except ValueError as exc:
                    report.skipped.append((method, size, rep, str(exc)))
                    continue
                scores = test.base_score if tuner is None else tuner.apply(test)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", EmptyArmWarning)
                    for metric in cfg.metrics:
                        if metric == "mse":
                            value = mse_true(scores, test_truth)
                        elif metric == "auuc":
                            value = auuc(scores, test, m=cfg.fit.m)
                        else:
                            value = policy_value(_policy_actions(scores, cfg.policy), test, cfg.policy)
                        report.rows.append((method, size, rep, metric, float(value)))
                if progress is not None:
                    progress(method, size, rep)
    return report
