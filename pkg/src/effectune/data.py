"""Experimental datasets: loading, validation, and the IPW-transformed outcome."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ExperimentDataset:
    """One randomized experiment: features, binary treatment, outcome, base score.

    The treatment propensity is a design constant supplied out of band (the
    experiment's known assignment probability), never estimated from the data.
    Arrays are locked read-only after validation so datasets can be shared
    freely across workers.
    """

    features: np.ndarray  # (n, k) float
    treatment: np.ndarray  # (n,) values in {0, 1}
    outcome: np.ndarray  # (n,) float
    base_score: np.ndarray  # (n,) float
    propensity_treated: float
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        treatment = np.asarray(self.treatment, dtype=np.float64)
        outcome = np.asarray(self.outcome, dtype=np.float64)
        base_score = np.asarray(self.base_score, dtype=np.float64)
        n = treatment.shape[0]
        if n < 1:
            raise ValueError("dataset must contain at least one row")
        if features.shape[0] != n or outcome.shape[0] != n or base_score.shape[0] != n:
            raise ValueError(
                "misaligned columns: features=%d treatment=%d outcome=%d base_score=%d"
                % (features.shape[0], n, outcome.shape[0], base_score.shape[0])
            )
        bad = ~np.isin(treatment, (0.0, 1.0))
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"treatment must be 0 or 1, found {treatment[i]!r} at row {i}")
        for name, arr in (("features", features), ("outcome", outcome), ("base_score", base_score)):
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite value in {name}")
        if not (0.0 < self.propensity_treated < 1.0):
            raise ValueError(f"propensity_treated must lie in (0, 1), got {self.propensity_treated}")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise ValueError(f"{len(names)} feature names for {features.shape[1]} feature columns")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "treatment", _frozen(treatment))
        object.__setattr__(self, "outcome", _frozen(outcome))
        object.__setattr__(self, "base_score", _frozen(base_score))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.treatment.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "ExperimentDataset":
        """Row-indexed view (copying) with the same propensity and names."""
        return ExperimentDataset(
            features=self.features[rows],
            treatment=self.treatment[rows],
            outcome=self.outcome[rows],
            base_score=self.base_score[rows],
            propensity_treated=self.propensity_treated,
            feature_names=self.feature_names,
        )


@dataclass(frozen=True)
class SimulatedTruth:
    """Per-row ground truth for simulated data: potential outcomes and CATE.

    ``cate`` is the noiseless conditional expectation of y1 - y0 at the row's
    features, so it is only available for simulated populations.
    """

    y0: np.ndarray
    y1: np.ndarray
    cate: np.ndarray

    def __post_init__(self):
        y0 = np.asarray(self.y0, dtype=np.float64)
        y1 = np.asarray(self.y1, dtype=np.float64)
        cate = np.asarray(self.cate, dtype=np.float64)
        if not (y0.shape == y1.shape == cate.shape):
            raise ValueError("y0, y1, cate must have identical shapes")
        object.__setattr__(self, "y0", _frozen(y0))
        object.__setattr__(self, "y1", _frozen(y1))
        object.__setattr__(self, "cate", _frozen(cate))

    def subset(self, rows) -> "SimulatedTruth":
        return SimulatedTruth(self.y0[rows], self.y1[rows], self.cate[rows])


def transformed_outcome(d: ExperimentDataset) -> np.ndarray:
    """Inverse-propensity-weighted outcome y*t/p - y*(1-t)/(1-p).

    Under randomization its conditional expectation given features equals the
    CATE, which makes it the regression target for effect calibration.
    """
    p1 = d.propensity_treated
    return d.outcome * d.treatment / p1 - d.outcome * (1.0 - d.treatment) / (1.0 - p1)


def _require_numeric(frame: pd.DataFrame, col: str) -> np.ndarray:
    raw = frame[col]
    bad = pd.to_numeric(raw, errors="coerce").isna()
    if bad.any():
        i = int(bad.idxmax())
        raise ValueError(f"unparseable or missing numeric value {raw.iloc[i]!r} at row {i}, column {col!r}")
    # numpy's string parser is correctly rounded; pandas' fast path is not
    return raw.to_numpy(dtype=np.float64)


def load_dataset(
    source,
    treatment_col: str = "treatment",
    outcome_col: str = "outcome",
    score_col: str = "base_score",
    propensity_treated: float = 0.5,
) -> ExperimentDataset:
    """Read an experiment CSV, mapping columns to roles by name.

    Every column other than the three role columns becomes a feature, in file
    order. The file must have a header row; missing values and non-binary
    treatments are rejected with the offending row/column identified.
    """
    frame = pd.read_csv(source, dtype=str, skipinitialspace=True)
    if frame.shape[0] == 0:
        raise ValueError("empty dataset: file has a header but no rows")
    for role, col in (("treatment", treatment_col), ("outcome", outcome_col), ("base_score", score_col)):
        if col not in frame.columns:
            raise ValueError(f"missing {role} column {col!r}; file has columns {list(frame.columns)}")
    treatment = _require_numeric(frame, treatment_col)
    bad = ~np.isin(treatment, (0.0, 1.0))
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"non-binary treatment value {treatment[i]!r} at row {i}, column {treatment_col!r}")
    outcome = _require_numeric(frame, outcome_col)
    base_score = _require_numeric(frame, score_col)
    feature_names = [c for c in frame.columns if c not in (treatment_col, outcome_col, score_col)]
    if feature_names:
        features = np.column_stack([_require_numeric(frame, c) for c in feature_names])
    else:
        features = np.empty((frame.shape[0], 0))
    return ExperimentDataset(
        features=features,
        treatment=treatment,
        outcome=outcome,
        base_score=base_score,
        propensity_treated=propensity_treated,
        feature_names=tuple(feature_names),
    )


def save_dataset(d: ExperimentDataset, path) -> None:
    """Write a dataset back to CSV in the layout load_dataset expects."""
    frame = pd.DataFrame(np.asarray(d.features), columns=list(d.feature_names))
    frame["treatment"] = d.treatment.astype(np.int64)
    frame["outcome"] = d.outcome
    frame["base_score"] = d.base_score
    frame.to_csv(path, index=False, float_format="%.17g")


def save_truth(t: SimulatedTruth, path) -> None:
    pd.DataFrame({"y0": t.y0, "y1": t.y1, "cate": t.cate}).to_csv(path, index=False, float_format="%.17g")


def load_truth(path) -> SimulatedTruth:
    frame = pd.read_csv(path)
    for col in ("y0", "y1", "cate"):
        if col not in frame.columns:
            raise ValueError(f"missing column {col!r} in truth file")
    return SimulatedTruth(frame["y0"].to_numpy(), frame["y1"].to_numpy(), frame["cate"].to_numpy())
