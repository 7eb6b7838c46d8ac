"""Effect-ordering fine-tuning: boosted single-split score shifts.

Each round picks the feature-space split and score shift that most improve
the level-based AUUC of the current working scores, then adds the shift to
the scores of the chosen side. Shift candidates are the points where the
shifted side's members change rank, enumerated by the incremental scan in
``_shift_scan``; grouping adjacent scores into buckets bounds the number of
candidates on large samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from effectune._shift_scan import scan_direction
from effectune.calibration import fit_calibration
from effectune.data import ExperimentDataset
from effectune.model import CalibrationStage, EOStump, FineTuner, StumpStage
from effectune.tree import FitConfig, enumerate_splits

__all__ = ["EOStump", "ShiftTrace", "find_optimal_shift", "fit_eo", "fit_eo_stump"]


@dataclass
class ShiftTrace:
    """Full record of one shift search, for audits and tests.

    ``candidates`` holds every (shift, cumulative AUUC change) the scan
    visited, positive direction first. ``item_rows`` maps each item to its
    member row indices; ``final_levels`` are the per-item levels after each
    directional sweep ran to exhaustion.
    """

    best_shift: float
    best_delta: float
    candidates: list = field(default_factory=list)
    item_theta: np.ndarray = None
    item_shifted: np.ndarray = None
    item_levels: np.ndarray = None
    item_rows: list = None
    final_levels: dict = None


def _build_items(scores, right_mask, treatment, outcome, bucket_groups):
    """Group observations into scan items: (percentile group x side), or
    (distinct score x side) when bucketing is off or groups are singletons.

    Item score is the member mean, except that groups whose members all share
    one value keep that value exactly.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if bucket_groups is None or bucket_groups >= n:
        _, gid = np.unique(scores, return_inverse=True)
    else:
        ordered = np.sort(scores)
        below = np.searchsorted(ordered, scores, side="left")
        gid = (bucket_groups * below) // n
    combined = gid * 2 + right_mask.astype(np.int64)
    _, item_of = np.unique(combined, return_inverse=True)
    n_items = int(item_of.max()) + 1

    counts = np.bincount(item_of, minlength=n_items)
    sums = np.bincount(item_of, weights=scores, minlength=n_items)
    lows = np.full(n_items, np.inf)
    highs = np.full(n_items, -np.inf)
    np.minimum.at(lows, item_of, scores)
    np.maximum.at(highs, item_of, scores)
    theta = np.where(lows == highs, lows, sums / counts)

    t = treatment
    cnt1 = np.bincount(item_of, weights=t, minlength=n_items).astype(np.int64)
    cnt0 = counts - cnt1
    sum1 = np.bincount(item_of, weights=t * outcome, minlength=n_items)
    sum0 = np.bincount(item_of, weights=(1.0 - t) * outcome, minlength=n_items)
    shifted = np.bincount(item_of, weights=right_mask.astype(np.float64), minlength=n_items)
    shifted = (shifted > 0).astype(np.int8)  # an item is entirely one side by construction

    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    cnt0, cnt1 = cnt0[order], cnt1[order]
    sum0, sum1 = sum0[order], sum1[order]
    shifted = shifted[order]
    counts = counts[order]
    inverse_order = np.empty(n_items, dtype=np.int64)
    inverse_order[order] = np.arange(n_items)
    item_of = inverse_order[item_of]

    # observation-level quantile levels: items with bitwise-equal scores share
    # their strictly-below member count
    below_members = np.concatenate([[0], np.cumsum(counts)[:-1]])
    for i in range(1, n_items):
        if theta[i] == theta[i - 1]:
            below_members[i] = below_members[i - 1]
    return theta, shifted, cnt0, cnt1, sum0, sum1, below_members, item_of


def find_optimal_shift(
    scores: np.ndarray,
    left_mask: np.ndarray,
    right_mask: np.ndarray,
    d: ExperimentDataset,
    cfg: FitConfig = FitConfig(),
    return_trace: bool = False,
):
    """Best uniform score shift for the right-mask observations, judged by the
    change it induces in the m-level AUUC; zero is always a candidate, so the
    returned change is never negative."""
    scores = np.asarray(scores, dtype=np.float64)
    left_mask = np.asarray(left_mask, dtype=bool)
    right_mask = np.asarray(right_mask, dtype=bool)
    if left_mask.shape != right_mask.shape or left_mask.shape[0] != d.n:
        raise ValueError("masks and dataset must be aligned")
    if (left_mask & right_mask).any() or not (left_mask | right_mask).all():
        raise ValueError("masks must be disjoint and cover every row")
    if not left_mask.any() or not right_mask.any():
        raise ValueError("both sides must be nonempty")

    m = cfg.m
    n = d.n
    theta, shifted, cnt0, cnt1, sum0, sum1, below, item_of = _build_items(
        scores, right_mask, d.treatment, d.outcome, cfg.bucket_groups
    )
    levels = (m * below) // n
    spread = float(theta[-1] - theta[0]) if theta.shape[0] > 1 else 0.0
    eps_step = cfg.epsilon * (spread if spread > 0.0 else 1.0)

    n_items = theta.shape[0]
    cap = m * n_items + 2
    best_shift, best_delta = 0.0, 0.0
    trace = ShiftTrace(
        best_shift=0.0,
        best_delta=0.0,
        item_theta=theta,
        item_shifted=shifted,
        item_levels=levels,
        item_rows=[np.flatnonzero(item_of == i) for i in range(n_items)] if return_trace else None,
        final_levels={},
    )
    for sign, rise_shifted in ((1.0, 1), (-1.0, 0)):
        out_shift = np.empty(cap, np.float64)
        out_delta = np.empty(cap, np.float64)
        out_lo = np.empty(cap, np.int64)
        out_hi = np.empty(cap, np.int64)
        out_levels = np.empty(n_items, np.int64)
        count = scan_direction(
            theta,
            shifted,
            levels,
            cnt0,
            cnt1,
            sum0,
            sum1,
            m,
            eps_step,
            rise_shifted,
            out_shift,
            out_delta,
            out_lo,
            out_hi,
            out_levels,
        )
        for k in range(count):
            shift = sign * out_shift[k]
            trace.candidates.append((shift, float(out_delta[k]), int(out_lo[k]), int(out_hi[k])))
            if out_delta[k] > best_delta:
                best_shift, best_delta = float(shift), float(out_delta[k])
        trace.final_levels[int(sign)] = out_levels
    trace.best_shift, trace.best_delta = best_shift, best_delta
    if return_trace:
        return trace
    return best_shift, best_delta


def _fraction_filtered_candidates(routing, treatment, cfg):
    n = routing.shape[0]
    min_side = cfg.min_split_fraction * n
    out = []
    for cand in enumerate_splits(routing, treatment, cfg):
        n_left = int((routing[:, cand.feature_index] <= cand.threshold).sum())
        if min(n_left, n - n_left) >= min_side:
            out.append(cand)
    return out


def fit_eo_stump(scores: np.ndarray, d: ExperimentDataset, cfg: FitConfig = FitConfig()):
    """Best single-split shift over all candidate cuts of (features, base score).

    Only cuts whose smaller side holds at least ``min_split_fraction`` of the
    sample are searched. Returns (stump, delta); (None, 0.0) when nothing
    improves the AUUC.
    """
    scores = np.asarray(scores, dtype=np.float64)
    routing = np.column_stack([d.features, d.base_score])
    best = None
    best_delta = 0.0
    for cand in _fraction_filtered_candidates(routing, d.treatment, cfg):
        right = routing[:, cand.feature_index] > cand.threshold
        shift, delta = find_optimal_shift(scores, ~right, right, d, cfg)
        if delta > best_delta:
            best = EOStump(feature=cand.feature_index, threshold=cand.threshold, side="right", shift=shift)
            best_delta = delta
    if best is None:
        return None, 0.0
    return best, best_delta


def fit_eo(d: ExperimentDataset, cfg: FitConfig = FitConfig()) -> FineTuner:
    """Boosting loop: fit a stump on the current working scores, add its shift,
    repeat up to ``n_trees`` times, stopping early once no split helps. The
    accumulated shifts are followed by one final calibration."""
    routing = np.column_stack([d.features, d.base_score])
    working = d.base_score.copy()
    stumps = []
    for _ in range(cfg.n_trees):
        stump, delta = fit_eo_stump(working, d, cfg)
        if stump is None:
            break
        working[stump.region(routing)] += stump.shift
        stumps.append(stump)
    post = fit_calibration(working, d)
    stages = []
    if stumps:
        stages.append(StumpStage(stumps=tuple(stumps), score_feature="base"))
    stages.append(CalibrationStage(post))
    return FineTuner(
        kind="eo",
        stages=stages,
        feature_names=d.feature_names,
        metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed},
    )
