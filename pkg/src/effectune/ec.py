"""Effect-classification fine-tuning.

Each leaf stores the decision boundary over base scores that maximizes the
IPW-estimated value of the policy "treat when score > boundary", and splits
maximize the weighted gain in that policy value. Subtracting the boundary
from the base scores makes the plain sign test reproduce every leaf's
classifier.
"""

from __future__ import annotations

import numpy as np

from effectune.calibration import fit_calibration
from effectune.data import ExperimentDataset
from effectune.model import CalibrationStage, FineTuner, TreeCorrectionStage
from effectune.tree import FitConfig, grow_tree


def _boundary_scan(scores, treatment, outcome, p1, cost, eps):
    """Exhaustive scan of the candidate decision boundaries for one leaf.

    Candidates are "treat none" plus one boundary just below each distinct
    score, walked from highest to lowest so that value ties keep the
    treat-fewer classifier. Returns (boundary, value, n_treated); the final
    boundary is the point closest to zero among all boundaries that induce
    the winning classification under the strict > rule.
    """
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = treatment[order]
    y = outcome[order]
    n = s.shape[0]
    # contribution of row i to the value sum if treated / if untreated
    gain_treated = np.where(t == 1.0, y / p1, 0.0)
    gain_untreated = np.where(t == 0.0, y / (1.0 - p1), 0.0)
    cum_treated = np.concatenate([[0.0], np.cumsum(gain_treated)])
    total_untreated = gain_untreated.sum()
    cum_untreated = np.concatenate([[0.0], np.cumsum(gain_untreated)])
    # valid prefix sizes: 0 (treat none) and every position where the score drops
    boundaries = np.flatnonzero(np.diff(s) != 0.0) + 1
    sizes = np.concatenate([[0], boundaries, [n]])
    best_k = 0
    best_value = -np.inf
    for k in sizes:
        value = (cum_treated[k] + (total_untreated - cum_untreated[k]) - k * cost) / n
        if value > best_value:
            best_value = value
            best_k = int(k)
    lo = s[best_k] if best_k < n else -np.inf  # largest untreated score
    hi = s[best_k - 1] if best_k > 0 else np.inf  # smallest treated score
    if lo <= 0.0 < hi:
        boundary = 0.0
    elif lo > 0.0:
        boundary = float(lo)
    else:  # hi <= 0: the interval is open at hi, so step just inside it
        boundary = float(hi) - eps
    return boundary, float(best_value), best_k


def _eps_abs(scores, epsilon):
    spread = float(np.max(scores) - np.min(scores)) if scores.size else 0.0
    return epsilon * (spread if spread > 0.0 else 1.0)


def find_optimal_threshold(d: ExperimentDataset, cfg: FitConfig = FitConfig(), cost: float = 0.0) -> tuple[float, float]:
    """Best decision boundary for a single leaf and its estimated policy value."""
    if d.n == 0:
        raise ValueError("cannot fit a threshold on an empty subset")
    boundary, value, _ = _boundary_scan(
        d.base_score, d.treatment, d.outcome, d.propensity_treated, cost, _eps_abs(d.base_score, cfg.epsilon)
    )
    return boundary, value


def ec_split_gain(
    parent: ExperimentDataset,
    left: ExperimentDataset,
    right: ExperimentDataset,
    cfg: FitConfig = FitConfig(),
    cost: float = 0.0,
) -> float:
    """Weighted child policy values minus the parent's, each at its own
    optimal boundary. Never negative: children can always keep the parent's
    classifier."""
    _, v_p = find_optimal_threshold(parent, cfg, cost)
    _, v_l = find_optimal_threshold(left, cfg, cost)
    _, v_r = find_optimal_threshold(right, cfg, cost)
    return (left.n / parent.n) * v_l + (right.n / parent.n) * v_r - v_p


def fit_ec(d: ExperimentDataset, cfg: FitConfig = FitConfig(), cost: float = 0.0) -> FineTuner:
    """Grow the classification tree and encode it as score corrections, then
    calibrate the corrected scores for cross-task comparability."""
    if d.n == 0:
        raise ValueError("cannot fit on an empty dataset")
    p1 = d.propensity_treated
    eps = _eps_abs(d.base_score, cfg.epsilon)
    routing = np.column_stack([d.features, d.base_score])

    def scan(rows):
        return _boundary_scan(d.base_score[rows], d.treatment[rows], d.outcome[rows], p1, cost, eps)

    def leaf_fn(rows):
        return scan(rows)[0]

    # the engine evaluates many candidate cuts of one parent; its scan is
    # identical across them, so cache by node identity
    parent_cache = {"rows": None, "value": 0.0}

    def gain_fn(parent, left, right):
        if parent_cache["rows"] is not parent:
            parent_cache["rows"] = parent
            parent_cache["value"] = scan(parent)[1]
        w_l = left.shape[0] / parent.shape[0]
        w_r = right.shape[0] / parent.shape[0]
        return w_l * scan(left)[1] + w_r * scan(right)[1] - parent_cache["value"]

    tree = grow_tree(routing, d.treatment, leaf_fn, gain_fn, cfg)
    corrected = d.base_score - tree.predict(routing)
    post = fit_calibration(corrected, d)
    return FineTuner(
        kind="ec",
        stages=[TreeCorrectionStage(tree, score_feature="base"), CalibrationStage(post)],
        feature_names=d.feature_names,
        metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed, "cost": cost},
    )
