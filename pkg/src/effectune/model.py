"""Serializable scoring pipelines.

A fitted model is an ordered list of stages applied to the base-score column
of a dataset: affine calibrations, tree-structured corrections that are
subtracted from the running scores, and stump ensembles whose shifts are
added to them. Stages that route rows through feature space may use either
the running ("working") scores or the dataset's raw base scores as an extra
routing feature, on top of the named feature columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from effectune.calibration import CalibrationParams, apply_calibration
from effectune.data import ExperimentDataset
from effectune.tree import TreeNode

SCHEMA_VERSION = 1
KINDS = ("calibrated", "ee", "ec", "eo", "ct", "ct_bs")
SCORE_FEATURES = ("working", "base", None)


@dataclass(frozen=True)
class EOStump:
    """One single-split shift: rows on ``side`` of the cut get ``shift`` added
    to their scores. ``feature`` indexes the routing matrix (named features
    first, the score pseudo-feature last)."""

    feature: int
    threshold: float
    side: str  # "left" (<= threshold) or "right" (> threshold)
    shift: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"stump side must be 'left' or 'right', got {self.side!r}")
        if not math.isfinite(self.shift):
            raise ValueError("stump shift must be finite")

    def region(self, X: np.ndarray) -> np.ndarray:
        at_most = X[:, self.feature] <= self.threshold
        return at_most if self.side == "left" else ~at_most


def _routing_matrix(features, working, base, score_feature):
    if score_feature is None:
        return features
    extra = working if score_feature == "working" else base
    return np.column_stack([features, extra])


@dataclass(frozen=True)
class CalibrationStage:
    params: CalibrationParams

    def apply(self, working, features, base):
        return apply_calibration(self.params, working)

    def to_dict(self):
        return {"calibration": {"scale": self.params.scale, "shift": self.params.shift}}


@dataclass(frozen=True)
class TreeCorrectionStage:
    tree: TreeNode
    score_feature: Optional[str]

    def apply(self, working, features, base):
        X = _routing_matrix(features, working, base, self.score_feature)
        return working - self.tree.predict(X)

    def to_dict(self):
        return {"tree": self.tree.to_dict(), "combine": "subtract_correction", "score_feature": self.score_feature}


@dataclass(frozen=True)
class StumpStage:
    stumps: tuple[EOStump, ...]
    score_feature: Optional[str] = "base"

    def apply(self, working, features, base):
        X = _routing_matrix(features, working, base, self.score_feature)
        out = working.copy()
        for stump in self.stumps:
            out[stump.region(X)] += stump.shift
        return out

    def to_dict(self):
        return {
            "stumps": [
                {"feature": s.feature, "threshold": s.threshold, "side": s.side, "shift": s.shift}
                for s in self.stumps
            ],
            "combine": "add_shifts",
            "score_feature": self.score_feature,
        }


def _stage_from_dict(data: dict):
    if "calibration" in data:
        cal = data["calibration"]
        return CalibrationStage(CalibrationParams(scale=float(cal["scale"]), shift=float(cal["shift"])))
    if "tree" in data:
        if data.get("combine") != "subtract_correction":
            raise ValueError(f"unknown tree combine rule {data.get('combine')!r}")
        return TreeCorrectionStage(tree=TreeNode.from_dict(data["tree"]), score_feature=data.get("score_feature"))
    if "stumps" in data:
        if data.get("combine") != "add_shifts":
            raise ValueError(f"unknown stump combine rule {data.get('combine')!r}")
        stumps = tuple(
            EOStump(
                feature=int(s["feature"]),
                threshold=float(s["threshold"]),
                side=str(s["side"]),
                shift=float(s["shift"]),
            )
            for s in data["stumps"]
        )
        return StumpStage(stumps=stumps, score_feature=data.get("score_feature"))
    raise ValueError(f"unrecognized stage with keys {sorted(data)}")


@dataclass
class FineTuner:
    """An ordered scoring pipeline fitted on one experiment.

    ``feature_names`` records the training feature columns; applying the model
    requires those columns (matched by name) whenever any stage routes through
    feature space.
    """

    kind: str
    stages: list
    feature_names: tuple[str, ...] = ()
    metadata: dict = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fine-tuner kind {self.kind!r}; expected one of {KINDS}")
        if self.metadata is None:
            self.metadata = {}
        self.feature_names = tuple(self.feature_names)

    def apply(self, d: ExperimentDataset) -> np.ndarray:
        needs_features = any(not isinstance(s, CalibrationStage) for s in self.stages)
        if needs_features:
            missing = [name for name in self.feature_names if name not in d.feature_names]
            if missing:
                raise ValueError(f"dataset is missing features required by the model: {missing}")
            cols = [d.feature_names.index(name) for name in self.feature_names]
            features = d.features[:, cols]
        else:
            features = d.features
        working = d.base_score.copy()
        for stage in self.stages:
            working = stage.apply(working, features, d.base_score)
        return working

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "stages": [s.to_dict() for s in self.stages],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FineTuner":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema version {version!r}, expected {SCHEMA_VERSION}")
        kind = data.get("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown fine-tuner kind {kind!r}; expected one of {KINDS}")
        return cls(
            kind=kind,
            stages=[_stage_from_dict(s) for s in data.get("stages", [])],
            feature_names=tuple(data.get("feature_names", ())),
            metadata=data.get("metadata", {}),
        )


def apply_finetuner(f: FineTuner, d: ExperimentDataset) -> np.ndarray:
    return f.apply(d)


def save_model(f: FineTuner, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(f.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> FineTuner:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"malformed model file {path}: {e}") from e
    return FineTuner.from_dict(data)
