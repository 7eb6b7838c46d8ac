import numpy as np
import pytest

from effectune.eo import EOStump, find_optimal_shift, fit_eo, fit_eo_stump, _fraction_filtered_candidates
from effectune.metrics import EmptyArmWarning, auuc, quantile_group
from effectune.model import CalibrationStage, StumpStage
from effectune.tree import FitConfig

from conftest import make_dataset

pytestmark = pytest.mark.filterwarnings("ignore::effectune.metrics.EmptyArmWarning")


def exact_cfg(m=5, **kwargs):
    base = dict(m=m, bucket_groups=None, min_leaf=2, min_arm=0)
    base.update(kwargs)
    return FitConfig(**base)


def oracle_best_shift(scores, right, d, m):
    """Independent shift oracle: the AUUC of shifted scores is a step function
    of the shift, with steps only where a shifted row crosses an unshifted
    row; sample every step interval at its midpoint and recompute from
    scratch."""
    base = auuc(scores, d, m)
    gaps = []
    for i in np.flatnonzero(~right):
        for j in np.flatnonzero(right):
            gaps.append(scores[i] - scores[j])  # positive-direction crossings
    gaps = np.unique([g for g in gaps if np.isfinite(g)])
    candidates = [0.0]
    for side in (1.0, -1.0):
        g = np.sort(np.unique(side * gaps))
        g = g[g > 0]
        if g.size:
            mids = np.concatenate([(g[:-1] + g[1:]) / 2.0, [g[-1] + 1.0]])
            # also just past each step
            candidates.extend((side * m_).item() for m_ in mids)
    best = 0.0
    for c in candidates:
        delta = auuc(scores + right * c, d, m) - base
        if delta > best + 1e-12:
            best = delta
    return best


class TestFindOptimalShift:
    def test_zero_outcomes(self):
        d = make_dataset(treatment=[1, 0, 1, 1, 0, 0], outcome=[0.0] * 6)
        scores = np.array([6.0, 5.0, 4.0, 3.0, 2.0, 1.0])
        right = np.zeros(6, dtype=bool)
        right[3] = True
        shift, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=2))
        assert (shift, delta) == (0.0, 0.0)

    def test_hand_example(self):
        d = make_dataset(treatment=[1, 0, 1, 1, 0, 0], outcome=[0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        scores = np.array([6.0, 5.0, 4.0, 3.0, 2.0, 1.0])
        right = np.zeros(6, dtype=bool)
        right[3] = True
        shift, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=2))
        assert delta == pytest.approx(0.25)
        assert shift == pytest.approx(1.0, abs=1e-4)
        assert shift > 1.0  # the nudge lands strictly past the crossing
        assert auuc(scores + right * shift, d, 2) == pytest.approx(1 / 3 + 0.25)

    def test_right_already_on_top(self):
        # shifted side already outranks everything and outcomes carry no
        # signal for demotion: stay at zero
        d = make_dataset(treatment=[1, 0, 1, 0], outcome=[0.0] * 4)
        scores = np.array([9.0, 8.0, 1.0, 0.5])
        right = np.array([True, True, False, False])
        shift, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=2))
        assert (shift, delta) == (0.0, 0.0)

    def test_mask_preconditions(self):
        d = make_dataset(treatment=[1, 0], outcome=[0.0, 0.0])
        with pytest.raises(ValueError, match="disjoint"):
            find_optimal_shift(np.array([1.0, 2.0]), np.array([True, True]), np.array([True, False]), d, exact_cfg(m=2))
        with pytest.raises(ValueError, match="nonempty"):
            find_optimal_shift(np.array([1.0, 2.0]), np.array([True, True]), np.array([False, False]), d, exact_cfg(m=2))

    def test_incremental_matches_from_scratch(self, rng):
        for _ in range(60):
            n = int(rng.integers(5, 51))
            m = int(rng.integers(2, 6))
            if n < m:
                continue
            scores = rng.uniform(-3, 3, n)
            right = rng.random(n) < rng.uniform(0.2, 0.8)
            if right.all() or not right.any():
                continue
            d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n))
            trace = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=m), return_trace=True)
            base = auuc(scores, d, m)
            for shift, delta, _, _ in trace.candidates:
                assert auuc(scores + right * shift, d, m) - base == pytest.approx(delta, abs=1e-9)

    def test_delta_never_negative(self, rng):
        for _ in range(40):
            n = int(rng.integers(6, 40))
            scores = rng.normal(size=n)
            right = rng.random(n) < 0.5
            if right.all() or not right.any():
                continue
            d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n))
            _, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=4))
            assert delta >= 0.0

    def test_best_matches_step_function_oracle(self, rng):
        for _ in range(25):
            n = int(rng.integers(6, 26))
            m = int(rng.integers(2, 5))
            scores = rng.uniform(0, 10, n)
            right = rng.random(n) < 0.5
            if right.all() or not right.any():
                continue
            d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n))
            _, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=m))
            assert delta == pytest.approx(oracle_best_shift(scores, right, d, m), abs=1e-9)

    def test_final_levels_match_realized_shift(self, rng):
        # after a full positive sweep, applying the last candidate shift must
        # reproduce the predicted level of every item
        for _ in range(20):
            n = int(rng.integers(8, 40))
            scores = rng.uniform(-5, 5, n)
            right = rng.random(n) < 0.5
            if right.all() or not right.any():
                continue
            d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n))
            m = 4
            trace = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=m), return_trace=True)
            positive = [c for c in trace.candidates if c[0] > 0]
            if not positive:
                continue
            last_shift = positive[-1][0]
            realized = quantile_group(scores + right * last_shift, m)
            predicted = trace.final_levels[1]
            for item, rows in enumerate(trace.item_rows):
                assert all(realized[r] == predicted[item] for r in rows)

    def test_bucketed_matches_exact_when_groups_exceed_n(self, rng):
        for _ in range(20):
            n = int(rng.integers(10, 60))
            scores = np.round(rng.normal(size=n), 1)
            right = rng.random(n) < 0.5
            if right.all() or not right.any():
                continue
            d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n))
            a = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=4))
            b = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=4, bucket_groups=n + 5))
            assert a == b

    def test_coarse_buckets_group_swaps(self, rng):
        # with very coarse buckets the search still returns a valid shift and
        # a nonnegative predicted improvement
        n = 200
        scores = rng.normal(size=n)
        right = rng.random(n) < 0.5
        d = make_dataset(treatment=rng.integers(0, 2, n), outcome=rng.normal(size=n) + right * 2.0)
        shift, delta = find_optimal_shift(scores, ~right, right, d, exact_cfg(m=5, bucket_groups=10))
        assert delta >= 0.0
        assert np.isfinite(shift)


class TestFitEOStump:
    def test_zero_outcomes_null(self, rng):
        n = 40
        d = make_dataset(
            treatment=rng.integers(0, 2, n),
            outcome=np.zeros(n),
            base_score=rng.normal(size=n),
            features=rng.integers(0, 2, (n, 2)).astype(float),
        )
        stump, delta = fit_eo_stump(d.base_score.copy(), d, exact_cfg())
        assert stump is None
        assert delta == 0.0

    def test_finds_underranked_group(self, rng):
        n = 300
        X = rng.integers(0, 2, (n, 2)).astype(float)
        t = rng.integers(0, 2, n).astype(float)
        effect = np.where(X[:, 0] == 1.0, 4.0, 0.0)
        y = t * effect + rng.normal(scale=0.3, size=n)
        d = make_dataset(treatment=t, outcome=y, base_score=rng.uniform(0, 1, n), features=X)
        stump, delta = fit_eo_stump(d.base_score.copy(), d, exact_cfg())
        assert stump is not None
        assert stump.feature == 0
        assert stump.side == "right"
        assert stump.shift > 0
        assert delta > 0

    def test_matches_exhaustive_split_by_shift_oracle(self, rng):
        for _ in range(8):
            n = 30
            X = rng.integers(0, 2, (n, 2)).astype(float)
            t = rng.integers(0, 2, n).astype(float)
            y = rng.normal(size=n)
            d = make_dataset(treatment=t, outcome=y, base_score=rng.uniform(0, 5, n), features=X)
            cfg = exact_cfg(m=3, min_split_fraction=0.3)
            scores = d.base_score.copy()
            routing = np.column_stack([d.features, d.base_score])
            best = 0.0
            for cand in _fraction_filtered_candidates(routing, d.treatment, cfg):
                right = routing[:, cand.feature_index] > cand.threshold
                best = max(best, oracle_best_shift(scores, right, d, cfg.m))
            stump, delta = fit_eo_stump(scores, d, cfg)
            assert delta == pytest.approx(best, abs=1e-9)

    def test_single_binary_feature_one_candidate(self, rng):
        n = 60
        X = rng.integers(0, 2, (n, 1)).astype(float)
        d = make_dataset(
            treatment=rng.integers(0, 2, n),
            outcome=rng.normal(size=n),
            base_score=np.full(n, 1.0),  # constant: the score column yields no cuts
            features=X,
        )
        cfg = exact_cfg(min_split_fraction=0.1)
        routing = np.column_stack([d.features, d.base_score])
        assert len(_fraction_filtered_candidates(routing, d.treatment, cfg)) == 1


class TestFitEO:
    def test_zero_trees_identity_plus_calibration(self, rng):
        n = 40
        d = make_dataset(
            treatment=rng.integers(0, 2, n),
            outcome=rng.normal(size=n),
            base_score=rng.normal(size=n),
        )
        f = fit_eo(d, exact_cfg(n_trees=0))
        assert f.kind == "eo"
        assert len(f.stages) == 1
        assert isinstance(f.stages[0], CalibrationStage)

    def test_null_first_stump_empty_ensemble(self, rng):
        n = 40
        d = make_dataset(
            treatment=rng.integers(0, 2, n),
            outcome=np.zeros(n),
            base_score=rng.normal(size=n),
            features=rng.integers(0, 2, (n, 1)).astype(float),
        )
        f = fit_eo(d, exact_cfg())
        assert not any(isinstance(s, StumpStage) for s in f.stages)

    def test_training_auuc_non_decreasing(self, rng):
        n = 400
        X = rng.integers(0, 2, (n, 2)).astype(float)
        t = rng.integers(0, 2, n).astype(float)
        effect = 3.0 * X[:, 0] - 2.0 * X[:, 1]
        y = t * effect + rng.normal(scale=0.5, size=n)
        d = make_dataset(treatment=t, outcome=y, base_score=rng.uniform(0, 1, n), features=X)
        cfg = exact_cfg(n_trees=6)
        f = fit_eo(d, cfg)
        stump_stages = [s for s in f.stages if isinstance(s, StumpStage)]
        assert stump_stages, "fixture should produce at least one stump"
        stumps = stump_stages[0].stumps
        routing = np.column_stack([d.features, d.base_score])
        working = d.base_score.copy()
        values = [auuc(working, d, cfg.m)]
        for stump in stumps:
            working[stump.region(routing)] += stump.shift
            values.append(auuc(working, d, cfg.m))
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_deterministic(self, rng):
        n = 150
        X = rng.integers(0, 2, (n, 2)).astype(float)
        t = rng.integers(0, 2, n).astype(float)
        y = rng.normal(size=n) + t * X[:, 0]
        d = make_dataset(treatment=t, outcome=y, base_score=rng.normal(size=n), features=X)
        f1 = fit_eo(d, exact_cfg())
        f2 = fit_eo(d, exact_cfg())
        assert [s.to_dict() for s in f1.stages] == [s.to_dict() for s in f2.stages]
