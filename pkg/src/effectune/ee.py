"""Effect-estimation fine-tuning and the causal-tree baseline.

Both fit a tree of additive corrections. The leaf statistic is the mean bias
of the (calibrated) scores against the arm-difference effect estimate, and
splits maximize the weighted sum of squared child biases minus the parent's,
which ranks candidate cuts exactly like the unobservable squared-error
criterion would. Setting the scores to zero turns the same machinery into a
plain causal tree whose leaves carry direct effect estimates.
"""

from __future__ import annotations

import numpy as np

from effectune.calibration import CalibrationParams, apply_calibration, fit_calibration
from effectune.data import ExperimentDataset
from effectune.model import CalibrationStage, FineTuner, TreeCorrectionStage
from effectune.tree import FitConfig, grow_tree


def _mean_bias(scores, treatment, outcome, rows) -> float:
    t = treatment[rows]
    y = outcome[rows]
    n1 = int(t.sum())
    n0 = rows.shape[0] - n1
    if n1 == 0 or n0 == 0:
        raise ValueError(f"subset has an empty arm (treated={n1}, control={n0})")
    ate = y[t == 1.0].mean() - y[t == 0.0].mean()
    return float(scores[rows].mean() - ate)


def _bias_gain(scores, treatment, outcome, parent, left, right) -> float:
    d_p = _mean_bias(scores, treatment, outcome, parent)
    d_l = _mean_bias(scores, treatment, outcome, left)
    d_r = _mean_bias(scores, treatment, outcome, right)
    w_l = left.shape[0] / parent.shape[0]
    w_r = right.shape[0] / parent.shape[0]
    return -d_p * d_p + w_l * d_l * d_l + w_r * d_r * d_r


def ee_leaf_correction(d: ExperimentDataset, scores: np.ndarray | None = None) -> float:
    """Mean score minus the arm-difference effect estimate over the subset."""
    s = d.base_score if scores is None else np.asarray(scores, dtype=np.float64)
    return _mean_bias(s, d.treatment, d.outcome, np.arange(d.n))


def ee_split_gain(parent: ExperimentDataset, left: ExperimentDataset, right: ExperimentDataset) -> float:
    """Reduction in (modified) squared error from cutting parent into children."""
    d_p = ee_leaf_correction(parent)
    d_l = ee_leaf_correction(left)
    d_r = ee_leaf_correction(right)
    w_l = left.n / parent.n
    w_r = right.n / parent.n
    return -d_p * d_p + w_l * d_l * d_l + w_r * d_r * d_r


def _correction_tree(features, treatment, outcome, working_scores, cfg):
    def leaf_fn(rows):
        return _mean_bias(working_scores, treatment, outcome, rows)

    def gain_fn(parent, left, right):
        return _bias_gain(working_scores, treatment, outcome, parent, left, right)

    return grow_tree(features, treatment, leaf_fn, gain_fn, cfg)


def fit_ee(d: ExperimentDataset, cfg: FitConfig = FitConfig()) -> FineTuner:
    """Calibrate, fit a bias-correction tree over (features, calibrated score),
    then calibrate the corrected scores once more."""
    pre = fit_calibration(d.base_score, d)
    working = apply_calibration(pre, d.base_score)
    routing = np.column_stack([d.features, working])
    tree = _correction_tree(routing, d.treatment, d.outcome, working, cfg)
    corrected = working - tree.predict(routing)
    post = fit_calibration(corrected, d)
    return FineTuner(
        kind="ee",
        stages=[CalibrationStage(pre), TreeCorrectionStage(tree, score_feature="working"), CalibrationStage(post)],
        feature_names=d.feature_names,
        metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed},
    )


def fit_causal_tree(
    d: ExperimentDataset,
    include_base_as_feature: bool = False,
    cfg: FitConfig = FitConfig(),
) -> FineTuner:
    """Causal-tree baseline: the correction tree run on all-zero scores, so
    each leaf's negated payload is a direct arm-difference effect estimate.

    With ``include_base_as_feature`` the raw base score joins the routing
    features (but still not the correction target). Output scores are
    calibrated effect estimates either way.
    """
    zeros = np.zeros(d.n)
    if include_base_as_feature:
        routing = np.column_stack([d.features, d.base_score])
        score_feature = "base"
    else:
        routing = d.features
        score_feature = None
    tree = _correction_tree(routing, d.treatment, d.outcome, zeros, cfg)
    estimates = -tree.predict(routing)
    post = fit_calibration(estimates, d)
    return FineTuner(
        kind="ct_bs" if include_base_as_feature else "ct",
        stages=[
            # zero out the base scores so the tree's corrections ARE the estimates
            CalibrationStage(CalibrationParams(scale=0.0, shift=0.0)),
            TreeCorrectionStage(tree, score_feature=score_feature),
            CalibrationStage(post),
        ],
        feature_names=d.feature_names,
        metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed},
    )
