import numpy as np
import pytest

from effectune.tree import FitConfig, SplitCandidate, TreeNode, enumerate_splits, grow_tree


def small_cfg(**kwargs):
    base = dict(max_depth=3, min_leaf=1, min_arm=0, n_split_quantiles=32)
    base.update(kwargs)
    return FitConfig(**base)


class TestFitConfig:
    def test_defaults(self):
        cfg = FitConfig()
        assert (cfg.max_depth, cfg.min_leaf, cfg.min_arm) == (4, 50, 10)
        assert (cfg.m, cfg.n_trees, cfg.min_split_fraction) == (10, 10, 0.4)
        assert cfg.bucket_groups == 100

    @pytest.mark.parametrize(
        "bad",
        [
            {"min_leaf": 0},
            {"min_split_fraction": 0.6},
            {"min_split_fraction": 0.0},
            {"m": 1},
            {"epsilon": 0.0},
            {"bucket_groups": 0},
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            FitConfig(**bad)

    def test_dict_round_trip(self):
        cfg = FitConfig(max_depth=2, bucket_groups=None, seed=7)
        assert FitConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown FitConfig"):
            FitConfig.from_dict({"depth": 3})


class TestEnumerateSplits:
    def test_binary_feature_single_candidate(self):
        X = np.array([[0.0], [1.0], [0.0], [1.0]])
        t = np.array([1.0, 0.0, 1.0, 0.0])
        cands = enumerate_splits(X, t, small_cfg())
        assert cands == [SplitCandidate(0, 0.5)]

    def test_constant_feature_no_candidate(self):
        X = np.ones((4, 1))
        t = np.array([1.0, 0.0, 1.0, 0.0])
        assert enumerate_splits(X, t, small_cfg()) == []

    def test_quantile_thinning(self, rng):
        col = rng.normal(size=1000)
        assert np.unique(col).shape[0] == 1000
        X = col[:, None]
        t = rng.integers(0, 2, 1000).astype(float)
        cands = enumerate_splits(X, t, small_cfg(n_split_quantiles=32))
        assert 0 < len(cands) <= 32
        # every threshold is a midpoint of adjacent distinct values
        distinct = np.unique(col)
        mids = set((distinct[:-1] + distinct[1:]) / 2.0)
        assert all(c.threshold in mids for c in cands)

    def test_min_leaf_filters(self):
        X = np.array([[0.0], [1.0], [1.0], [1.0]])
        t = np.array([1.0, 0.0, 1.0, 0.0])
        assert enumerate_splits(X, t, small_cfg(min_leaf=2)) == []

    def test_min_arm_filters(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        t = np.array([1.0, 1.0, 1.0, 0.0])  # left child has no control rows
        assert enumerate_splits(X, t, small_cfg(min_arm=1)) == []
        assert len(enumerate_splits(X, t, small_cfg(min_arm=0))) == 1


class TestGrowTree:
    def _counting_fns(self, values):
        def leaf_fn(rows):
            return float(values[rows].mean())

        def gain_fn(parent, left, right):
            # variance reduction, a plain regression criterion for testing
            def sse(r):
                v = values[r]
                return float(((v - v.mean()) ** 2).sum())

            return sse(parent) - sse(left) - sse(right)

        return leaf_fn, gain_fn

    def test_depth_zero_single_leaf(self, rng):
        X = rng.integers(0, 2, (20, 2)).astype(float)
        t = rng.integers(0, 2, 20).astype(float)
        values = rng.normal(size=20)
        leaf_fn, gain_fn = self._counting_fns(values)
        tree = grow_tree(X, t, leaf_fn, gain_fn, small_cfg(max_depth=0))
        assert tree.is_leaf
        assert tree.payload == pytest.approx(values.mean())

    def test_no_positive_gain_single_leaf(self, rng):
        X = rng.integers(0, 2, (20, 2)).astype(float)
        t = rng.integers(0, 2, 20).astype(float)
        tree = grow_tree(X, t, lambda r: 1.0, lambda p, l, r: 0.0, small_cfg())
        assert tree.is_leaf

    def test_root_splits_at_brute_force_argmax(self):
        # feature 1 at 0.5 separates values perfectly; feature 0 does not
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] * 5, dtype=float)
        t = np.tile([1.0, 0.0], 10)
        values = np.where(X[:, 1] == 1.0, 3.0, -3.0) + np.where(X[:, 0] == 1.0, 0.1, -0.1)
        leaf_fn, gain_fn = self._counting_fns(values)
        cfg = small_cfg(max_depth=1)
        gains = {}
        for cand in enumerate_splits(X, t, cfg):
            mask = X[:, cand.feature_index] <= cand.threshold
            rows = np.arange(20)
            gains[(cand.feature_index, cand.threshold)] = gain_fn(rows, rows[mask], rows[~mask])
        assert max(gains, key=gains.get) == (1, 0.5)
        tree = grow_tree(X, t, leaf_fn, gain_fn, cfg)
        assert (tree.feature, tree.threshold) == (1, 0.5)

    def test_chosen_split_attains_max_everywhere(self, rng):
        X = rng.integers(0, 2, (120, 4)).astype(float)
        t = rng.integers(0, 2, 120).astype(float)
        values = rng.normal(size=120) + X @ rng.normal(size=4)
        leaf_fn, gain_fn = self._counting_fns(values)
        cfg = small_cfg(min_leaf=5)
        tree = grow_tree(X, t, leaf_fn, gain_fn, cfg)

        def check(node, rows):
            if node.is_leaf:
                return
            best = max(
                gain_fn(rows, rows[X[rows, c.feature_index] <= c.threshold], rows[X[rows, c.feature_index] > c.threshold])
                for c in enumerate_splits(X[rows], t[rows], cfg)
            )
            mask = X[rows, node.feature] <= node.threshold
            got = gain_fn(rows, rows[mask], rows[~mask])
            assert got == pytest.approx(best, abs=1e-12)
            check(node.left, rows[mask])
            check(node.right, rows[~mask])

        check(tree, np.arange(120))

    def test_leaves_partition_rows(self, rng):
        X = rng.normal(size=(80, 3))
        t = rng.integers(0, 2, 80).astype(float)
        values = rng.normal(size=80)
        leaf_fn, gain_fn = self._counting_fns(values)
        tree = grow_tree(X, t, leaf_fn, gain_fn, small_cfg(min_leaf=4))
        # every row routes to exactly one leaf by construction of predict
        out = tree.predict(X)
        assert out.shape == (80,)
        payloads = {leaf.payload for leaf in tree.leaves()}
        assert set(np.unique(out)) <= payloads

    def test_deterministic(self, rng):
        X = rng.normal(size=(60, 3))
        t = rng.integers(0, 2, 60).astype(float)
        values = rng.normal(size=60)
        leaf_fn, gain_fn = self._counting_fns(values)
        t1 = grow_tree(X, t, leaf_fn, gain_fn, small_cfg(min_leaf=4))
        t2 = grow_tree(X, t, leaf_fn, gain_fn, small_cfg(min_leaf=4))
        assert t1.to_dict() == t2.to_dict()

    def test_tie_break_prefers_lower_feature_then_threshold(self):
        # two identical columns: any cut gives the same gain
        col = np.array([0.0, 0.0, 1.0, 1.0] * 3)
        X = np.column_stack([col, col])
        t = np.tile([1.0, 0.0], 6)
        values = np.where(col == 1.0, 1.0, -1.0)
        leaf_fn, gain_fn = self._counting_fns(values)
        tree = grow_tree(X, t, leaf_fn, gain_fn, small_cfg(max_depth=1))
        assert (tree.feature, tree.threshold) == (0, 0.5)

    def test_root_precondition(self):
        X = np.zeros((3, 1))
        t = np.array([1.0, 0.0, 1.0])
        with pytest.raises(ValueError, match="min_leaf"):
            grow_tree(X, t, lambda r: 0.0, lambda p, l, r: 0.0, small_cfg(min_leaf=10))
        with pytest.raises(ValueError, match="min_arm"):
            grow_tree(X, t, lambda r: 0.0, lambda p, l, r: 0.0, small_cfg(min_arm=2))


class TestTreeNode:
    def test_serialization_round_trip(self):
        tree = TreeNode(
            feature=0,
            threshold=0.5,
            left=TreeNode(payload=-1.5),
            right=TreeNode(feature=1, threshold=2.0, left=TreeNode(payload=0.0), right=TreeNode(payload=3.25)),
        )
        data = tree.to_dict()
        assert data["left"] == {"leaf": -1.5}
        back = TreeNode.from_dict(data)
        assert back == tree
        X = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 5.0]])
        assert back.predict(X).tolist() == tree.predict(X).tolist() == [-1.5, 0.0, 3.25]

    def test_malformed_node_rejected(self):
        with pytest.raises(ValueError, match="malformed tree node"):
            TreeNode.from_dict({"feature": 0, "threshold": 1.0})
