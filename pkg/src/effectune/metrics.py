"""Evaluation estimators for the three causal tasks.

Effect estimation is scored with squared error against the true CATE (or a
binned model-free variant when no ground truth exists), effect ordering with
a level-based area under the uplift curve, and effect classification with the
inverse-propensity-weighted value of the induced treatment policy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from effectune.data import ExperimentDataset, SimulatedTruth


class EmptyArmWarning(RuntimeWarning):
    """A rank had no treated or no control observations; its uplift term was zeroed."""


@dataclass(frozen=True)
class PolicyConfig:
    """Treatment policy settings: per-treatment cost, score cutoff, optional top-q."""

    cost: float = 0.0
    threshold: float = 0.0
    top_fraction: Optional[float] = None

    def __post_init__(self):
        if self.top_fraction is not None and not (0.0 < self.top_fraction <= 1.0):
            raise ValueError(f"top_fraction must lie in (0, 1], got {self.top_fraction}")


@dataclass(frozen=True)
class LevelPartition:
    """Rank structure behind the AUUC estimator.

    Observations are split into ``m`` score levels of (near) equal size;
    ``cum_count[r, t]`` and ``cum_sum[r, t]`` aggregate arm ``t`` over all
    observations at level ``r`` or higher, which is exactly what the uplift
    terms need.
    """

    m: int
    level_of: np.ndarray  # (n,) ints in [0, m)
    cum_count: np.ndarray  # (m, 2) counts, level >= r by arm
    cum_sum: np.ndarray  # (m, 2) outcome sums, level >= r by arm


def quantile_group(scores: np.ndarray, m: int) -> np.ndarray:
    """Assign each score to one of m rank groups: floor(m * F) with F the
    fraction of strictly smaller scores. Tied scores share a group."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    ordered = np.sort(scores)
    below = np.searchsorted(ordered, scores, side="left")
    # integer arithmetic: floor(m * below / n) without float rounding
    return (m * below) // n


def build_levels(scores: np.ndarray, d: ExperimentDataset, m: int) -> LevelPartition:
    """Partition observations into m score levels and tabulate cumulative arm
    counts and outcome sums from the top level down."""
    if m < 2:
        raise ValueError(f"need at least 2 levels, got m={m}")
    if d.n < m:
        raise ValueError(f"need n >= m, got n={d.n}, m={m}")
    level_of = quantile_group(scores, m)
    t = d.treatment.astype(np.int64)
    counts = np.zeros((m, 2), dtype=np.int64)
    sums = np.zeros((m, 2), dtype=np.float64)
    np.add.at(counts, (level_of, t), 1)
    np.add.at(sums, (level_of, t), d.outcome)
    cum_count = counts[::-1].cumsum(axis=0)[::-1]
    cum_sum = sums[::-1].cumsum(axis=0)[::-1]
    return LevelPartition(m=m, level_of=level_of, cum_count=cum_count, cum_sum=cum_sum)


def _v_hat(part: LevelPartition, r: int) -> float:
    n1 = part.cum_count[r, 1]
    n0 = part.cum_count[r, 0]
    if n1 == 0 or n0 == 0:
        warnings.warn(f"rank {r} has an empty arm; uplift term set to 0", EmptyArmWarning, stacklevel=3)
        return 0.0
    return part.cum_sum[r, 1] / n1 - part.cum_sum[r, 0] / n0


def auuc(scores: np.ndarray, d: ExperimentDataset, m: int = 10) -> float:
    """Area under the uplift curve: sum over q = 1..m of (q/m) times the
    estimated incremental effect among the top q/m score fraction.

    Ranks where either arm is empty contribute 0 (with an EmptyArmWarning);
    this keeps the estimator total on degenerate slices.
    """
    part = build_levels(scores, d, m)
    total = 0.0
    for q in range(1, m + 1):
        total += (q / m) * _v_hat(part, m - q)
    return total


def uplift_curve_points(scores: np.ndarray, d: ExperimentDataset, m: int = 10) -> list[tuple[float, float]]:
    """The (q, incremental effect) points behind the AUUC: for each treated
    fraction q = 1/m .. 1, the arm-difference estimate among the top q."""
    part = build_levels(scores, d, m)
    return [(q / m, _v_hat(part, m - q)) for q in range(1, m + 1)]


def mse_true(scores: np.ndarray, truth: SimulatedTruth) -> float:
    """Mean squared error of scores against the true CATE."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != truth.cate.shape:
        raise ValueError("scores and truth must be aligned")
    return float(np.mean((truth.cate - scores) ** 2))


def binned_mse(
    scores: np.ndarray,
    binning_scores: np.ndarray,
    d: ExperimentDataset,
    n_bins: int = 10,
) -> float:
    """Model-free squared-error proxy for when the true CATE is unknown.

    The test set is cut into percentile bins of ``binning_scores`` (the raw,
    uncalibrated base scores, so that every method shares the same bins); the
    per-bin error is the model-free effect estimate minus the mean score, and
    the result is the mean of squared bin errors.
    """
    scores = np.asarray(scores, dtype=np.float64)
    bins = quantile_group(binning_scores, n_bins)
    errors = []
    for b in range(n_bins):
        sel = bins == b
        t = d.treatment[sel]
        n1 = int(t.sum())
        n0 = int((1 - t).sum())
        if n1 == 0 or n0 == 0:
            arm = "treated" if n1 == 0 else "control"
            raise ValueError(f"bin {b} has no {arm} observations")
        y = d.outcome[sel]
        ate = y[t == 1].mean() - y[t == 0].mean()
        errors.append(ate - scores[sel].mean())
    return float(np.mean(np.square(errors)))


def policy_value(actions: np.ndarray, d: ExperimentDataset, cfg: PolicyConfig = PolicyConfig()) -> float:
    """IPW estimate of the expected outcome, net of treatment cost, under the
    policy that takes action a_i for individual i."""
    actions = np.asarray(actions, dtype=np.float64)
    if actions.shape != d.treatment.shape:
        raise ValueError("actions and dataset must be aligned")
    if not np.isin(actions, (0.0, 1.0)).all():
        raise ValueError("actions must be 0 or 1")
    p1 = d.propensity_treated
    p_assigned = np.where(d.treatment == 1.0, p1, 1.0 - p1)
    matched = d.treatment == actions
    return float(np.mean(matched * d.outcome / p_assigned - actions * cfg.cost))


def topq_actions(scores: np.ndarray, q: float) -> np.ndarray:
    """Treat exactly ceil(q * n) individuals with the largest scores.

    Boundary ties go to the lower row index, so the action vector is a
    deterministic function of (scores, q).
    """
    if not (0.0 < q <= 1.0):
        raise ValueError(f"q must lie in (0, 1], got {q}")
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    k = int(np.ceil(q * n))
    order = np.argsort(-scores, kind="stable")
    actions = np.zeros(n, dtype=np.float64)
    actions[order[:k]] = 1.0
    return actions


def ewm_true(scores: np.ndarray, truth: SimulatedTruth, cfg: PolicyConfig = PolicyConfig()) -> float:
    """Effect-weighted misclassification: mean |cate - cost| over rows where
    the score threshold test disagrees with the true high/low effect class."""
    scores = np.asarray(scores, dtype=np.float64)
    wrong = (truth.cate > cfg.cost) != (scores > cfg.threshold)
    return float(np.mean(np.abs(truth.cate - cfg.cost) * wrong))
