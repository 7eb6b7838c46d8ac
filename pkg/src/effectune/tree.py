"""Greedy binary-tree induction with pluggable split gain and leaf payload.

The same engine backs the effect-estimation fine-tuner, the effect-
classification fine-tuner, and the causal-tree baseline; they differ only in
the gain function and the statistic stored at each leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class SplitCandidate:
    """A single axis-aligned cut: rows with feature <= threshold go left."""

    feature_index: int
    threshold: float


@dataclass
class FitConfig:
    """Knobs shared by all tree-based fitting routines.

    ``m`` is the number of score levels used by ranking objectives,
    ``n_trees`` / ``min_split_fraction`` / ``bucket_groups`` only matter for
    the boosted-stump ordering fine-tuner, and ``epsilon`` is the relative
    nudge used to realize strict inequalities as concrete thresholds/shifts.
    Setting ``bucket_groups`` to None searches shifts at the individual level.
    """

    max_depth: int = 4
    min_leaf: int = 50
    min_arm: int = 10
    n_split_quantiles: int = 32
    min_gain: float = 0.0
    m: int = 10
    n_trees: int = 10
    min_split_fraction: float = 0.4
    bucket_groups: Optional[int] = 100
    epsilon: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.min_arm < 0:
            raise ValueError("min_arm must be >= 0")
        if self.n_split_quantiles < 1:
            raise ValueError("n_split_quantiles must be >= 1")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if not (0.0 < self.min_split_fraction <= 0.5):
            raise ValueError("min_split_fraction must lie in (0, 0.5]")
        if self.bucket_groups is not None and self.bucket_groups < 1:
            raise ValueError("bucket_groups must be >= 1 or None")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "FitConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown FitConfig fields: {sorted(unknown)}")
        return cls(**data)


class TreeNode:
    """Either an internal node (feature, threshold, left, right) or a leaf
    carrying a scalar payload."""

    __slots__ = ("feature", "threshold", "left", "right", "payload")

    def __init__(self, feature=None, threshold=None, left=None, right=None, payload=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.payload = payload

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Route every row of X to its leaf and return the payloads."""
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.float64)
        self._route(X, np.arange(X.shape[0]), out)
        return out

    def _route(self, X, idx, out):
        if self.is_leaf:
            out[idx] = self.payload
            return
        go_left = X[idx, self.feature] <= self.threshold
        self.left._route(X, idx[go_left], out)
        self.right._route(X, idx[~go_left], out)

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def internal_nodes(self):
        if not self.is_leaf:
            yield self
            yield from self.left.internal_nodes()
            yield from self.right.internal_nodes()

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.payload}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        if "leaf" in data:
            return cls(payload=float(data["leaf"]))
        if not {"feature", "threshold", "left", "right"} <= set(data):
            raise ValueError(f"malformed tree node: keys {sorted(data)}")
        return cls(
            feature=int(data["feature"]),
            threshold=float(data["threshold"]),
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )

    def __eq__(self, other):
        if not isinstance(other, TreeNode):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _column_thresholds(col: np.ndarray, n_quantiles: int) -> np.ndarray:
    """Candidate cut points for one feature column within a node.

    Binary 0/1 columns get the single cut 0.5; other columns get midpoints
    between adjacent distinct values, thinned to at most ``n_quantiles``
    empirical quantile positions when there are many distinct values.
    """
    distinct = np.unique(col)
    if distinct.shape[0] < 2:
        return np.empty(0)
    if distinct.shape[0] == 2 and distinct[0] == 0.0 and distinct[1] == 1.0:
        return np.array([0.5])
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    if midpoints.shape[0] <= n_quantiles:
        return midpoints
    probs = (np.arange(n_quantiles) + 1.0) / (n_quantiles + 1.0)
    anchors = np.quantile(col, probs, method="lower")
    pos = np.searchsorted(distinct, anchors, side="left")
    pos = pos[pos < distinct.shape[0] - 1]
    return np.unique(midpoints[pos])


def enumerate_splits(features: np.ndarray, treatment: np.ndarray, cfg: FitConfig) -> list[SplitCandidate]:
    """All admissible single-feature cuts of a node's rows.

    A cut is admissible when both children have at least ``min_leaf`` rows and
    at least ``min_arm`` treated and control observations each. Candidates are
    ordered by (feature index, threshold), which fixes downstream tie-breaks.
    """
    features = np.asarray(features, dtype=np.float64)
    treatment = np.asarray(treatment, dtype=np.float64)
    n = features.shape[0]
    if n == 0:
        raise ValueError("cannot enumerate splits of an empty subset")
    n1_total = int(treatment.sum())
    n0_total = n - n1_total
    out = []
    for j in range(features.shape[1]):
        col = features[:, j]
        thresholds = _column_thresholds(col, cfg.n_split_quantiles)
        if thresholds.shape[0] == 0:
            continue
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        cum_treated = np.concatenate([[0], np.cumsum(treatment[order])])
        for thr in thresholds:
            n_left = int(np.searchsorted(sorted_col, thr, side="right"))
            n_right = n - n_left
            if n_left < cfg.min_leaf or n_right < cfg.min_leaf:
                continue
            left1 = int(cum_treated[n_left])
            left0 = n_left - left1
            right1 = n1_total - left1
            right0 = n0_total - left0
            if min(left1, left0, right1, right0) < cfg.min_arm:
                continue
            out.append(SplitCandidate(feature_index=j, threshold=float(thr)))
    return out


def grow_tree(
    features: np.ndarray,
    treatment: np.ndarray,
    leaf_fn: Callable[[np.ndarray], float],
    gain_fn: Callable[[np.ndarray, np.ndarray, np.ndarray], float],
    cfg: FitConfig,
) -> TreeNode:
    """Greedy depth-first induction.

    ``leaf_fn(rows)`` produces the payload for a leaf over the given row
    indices; ``gain_fn(parent, left, right)`` scores a candidate cut. The
    best candidate wins, with exact ties resolved toward the lower feature
    index and then the lower threshold; a node becomes a leaf when out of
    depth, out of candidates, or when no candidate beats ``min_gain``.
    """
    features = np.asarray(features, dtype=np.float64)
    treatment = np.asarray(treatment, dtype=np.float64)
    n = features.shape[0]
    n1 = int(treatment.sum())
    if n < cfg.min_leaf:
        raise ValueError(f"root has {n} rows, fewer than min_leaf={cfg.min_leaf}")
    if min(n1, n - n1) < cfg.min_arm:
        raise ValueError(f"root has arms ({n1}, {n - n1}), below min_arm={cfg.min_arm}")

    def build(rows: np.ndarray, depth: int) -> TreeNode:
        if depth >= cfg.max_depth:
            return TreeNode(payload=float(leaf_fn(rows)))
        best = None
        best_gain = -np.inf
        for cand in enumerate_splits(features[rows], treatment[rows], cfg):
            go_left = features[rows, cand.feature_index] <= cand.threshold
            left, right = rows[go_left], rows[~go_left]
            gain = gain_fn(rows, left, right)
            if gain > best_gain:
                best, best_gain = (cand, left, right), gain
        if best is None or best_gain <= cfg.min_gain:
            return TreeNode(payload=float(leaf_fn(rows)))
        cand, left, right = best
        return TreeNode(
            feature=cand.feature_index,
            threshold=cand.threshold,
            left=build(left, depth + 1),
            right=build(right, depth + 1),
        )

    return build(np.arange(n), 0)
