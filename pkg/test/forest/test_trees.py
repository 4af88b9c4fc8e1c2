import numpy as np
from app.forest.trees import (
    LEAF,
    Criterion,
    Tree,
    grow_tree,
    prune_equal_leaves,
)
from django.test import SimpleTestCase


class TestGrowTree(SimpleTestCase):
    def setUp(self):
        self.X = np.arange(10, dtype=np.float64).reshape(-1, 1)
        self.step = (self.X[:, 0] >= 5).astype(np.float64)

    def test_step_function_is_recovered(self):
        tree = grow_tree(self.X, self.step)
        self.assertEqual(tree.feature[0], 0)
        self.assertEqual(tree.threshold[0], 4.5)
        np.testing.assert_array_equal(tree.predict(self.X), self.step)

    def test_constant_response_is_a_single_leaf(self):
        tree = grow_tree(self.X, np.full(10, 2.5))
        self.assertEqual(tree.node_count, 1)
        self.assertTrue(tree.is_leaf(0))
        np.testing.assert_array_equal(tree.predict(self.X), np.full(10, 2.5))

    def test_ties_go_to_the_lowest_feature(self):
        X = np.column_stack([self.X[:, 0], self.X[:, 0]])
        tree = grow_tree(X, self.step)
        self.assertEqual(tree.feature[0], 0)

    def test_min_leaf_is_respected(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(200, 3))
        y = X[:, 0] + rng.normal(size=200)
        tree = grow_tree(X, y, min_leaf=7)
        sizes = np.bincount(tree.apply(X))
        self.assertTrue(all(sizes[leaf] >= 7 for leaf in tree.leaves()))

    def test_max_depth_is_respected(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(100, 2))
        tree = grow_tree(X, X[:, 0] ** 2, max_depth=2)
        self.assertLessEqual(tree.max_depth, 2)
        stump = grow_tree(X, X[:, 0] ** 2, max_depth=0)
        self.assertEqual(stump.node_count, 1)

    def test_left_means_strictly_below_threshold(self):
        tree = grow_tree(self.X, self.step)
        leaf_values = tree.predict(np.array([[4.4999], [4.5]]))
        np.testing.assert_array_equal(leaf_values, [0.0, 1.0])

    def test_gini_leaves_hold_labels(self):
        tree = grow_tree(self.X, self.step, criterion=Criterion.GINI)
        self.assertEqual(sorted(set(tree.value)), [0.0, 1.0])

    def test_feature_subsampling_needs_a_generator(self):
        X = np.column_stack([self.X[:, 0], self.X[:, 0]])
        with self.assertRaisesMessage(ValueError, "random generator"):
            grow_tree(X, self.step, mtry=1)

    def test_feature_subsampling_is_seeded(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(80, 4))
        y = X @ np.array([1.0, -1.0, 0.5, 0.0])
        first = grow_tree(X, y, mtry=2, rng=np.random.default_rng(9))
        second = grow_tree(X, y, mtry=2, rng=np.random.default_rng(9))
        self.assertEqual(first.feature, second.feature)
        self.assertEqual(first.threshold, second.threshold)

    def test_adjacent_doubles_split_into_two_non_empty_leaves(self):
        X = np.array([[1.0], [np.nextafter(1.0, 2.0)]])
        y = np.array([0.0, 1.0])
        tree = grow_tree(X, y)
        self.assertEqual(tree.node_count, 3)
        self.assertGreater(tree.threshold[0], X[0, 0])
        self.assertLessEqual(tree.threshold[0], X[1, 0])
        sizes = np.bincount(tree.apply(X), minlength=tree.node_count)
        self.assertTrue(all(sizes[leaf] == 1 for leaf in tree.leaves()))
        self.assertFalse(np.isnan(tree.value).any())
        np.testing.assert_array_equal(tree.predict(X), y)


class TestPruneEqualLeaves(SimpleTestCase):
    def test_equal_children_collapse(self):
        tree = Tree(n_features=1)
        root = tree.add_node(1.0, 0)
        left = tree.add_node(1.0, 1)
        right = tree.add_node(1.0, 1)
        tree.feature[root], tree.threshold[root] = 0, 0.5
        tree.left[root], tree.right[root] = left, right
        pruned = prune_equal_leaves(tree)
        self.assertEqual(pruned.feature[0], LEAF)
        self.assertEqual(pruned.leaves(), [0])
        self.assertEqual(pruned.value[0], 1.0)

    def test_different_children_are_kept(self):
        X = np.arange(6, dtype=np.float64).reshape(-1, 1)
        labels = np.array([0, 0, 0, 1, 1, 1], dtype=np.float64)
        tree = prune_equal_leaves(grow_tree(X, labels, criterion="gini"))
        self.assertEqual(len(tree.leaves()), 2)
