import numpy as np
import pytest

from treatkit import trees

from conftest import make_separable


def leaf_mask(t):
    return t.feature == trees.LEAF


def test_perfect_fit_on_separable_data():
    X, y = make_separable(n=150, seed=1)
    t = trees.fit_cart(X, y.astype(np.float64))
    pred = t.predict(X)
    assert np.array_equal((pred >= 0.5).astype(int), y)


def test_left_branch_is_strictly_below_threshold():
    X = np.array([[0.0], [1.0]])
    y = np.array([0.0, 1.0])
    t = trees.fit_cart(X, y)
    assert t.feature[0] == 0
    thr = t.threshold[0]
    assert thr == 0.5
    # a point exactly at the threshold goes right
    assert t.predict(np.array([[thr]]))[0] == 1.0
    assert t.predict(np.array([[thr - 1e-9]]))[0] == 0.0


def test_min_leaf_respected():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 3))
    y = (rng.random(80) > 0.5).astype(np.float64)
    t = trees.grow_tree(X, y, mode=trees.MODE_GINI, min_leaf=7)
    # count training rows reaching each leaf
    counts = np.zeros(t.n_nodes, dtype=int)
    for i in range(X.shape[0]):
        node = 0
        while t.feature[node] != trees.LEAF:
            node = t.left[node] if X[i, t.feature[node]] < t.threshold[node] \
                else t.right[node]
        counts[node] += 1
    assert (counts[leaf_mask(t)] >= 7).all()


def test_weighted_fit_equals_row_duplication():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] + rng.normal(scale=0.3, size=40) > 0).astype(np.float64)
    w = rng.integers(1, 4, size=40).astype(np.float64)
    t_w = trees.grow_tree(X, y, weights=w, max_depth=4)
    rep = np.repeat(np.arange(40), w.astype(int))
    t_d = trees.grow_tree(X[rep], y[rep], max_depth=4)
    grid = rng.normal(size=(200, 3))
    np.testing.assert_allclose(t_w.predict(grid), t_d.predict(grid),
                               rtol=0, atol=1e-12)


def test_sse_leaf_is_newton_step():
    X = np.zeros((5, 1))
    resid = np.array([0.4, -0.2, 0.1, 0.3, -0.1])
    hess = np.array([0.2, 0.25, 0.1, 0.2, 0.25])
    lam = 0.7
    t = trees.grow_tree(X, resid, hess=hess, mode=trees.MODE_SSE,
                        max_depth=0, lam=lam)
    assert t.n_nodes == 1
    expected = resid.sum() / (hess.sum() + lam)
    assert t.value[0] == pytest.approx(expected, abs=1e-14)


def test_newton_leaf_is_minus_grad_over_hess():
    X = np.zeros((4, 1))
    grad = np.array([0.5, -0.3, 0.2, 0.1])
    hess = np.array([0.25, 0.25, 0.2, 0.2])
    lam = 1.0
    t = trees.grow_tree(X, grad, hess=hess, mode=trees.MODE_NEWTON,
                        max_depth=0, lam=lam)
    assert t.value[0] == pytest.approx(-grad.sum() / (hess.sum() + lam), abs=1e-14)


def test_newton_gamma_blocks_small_gains():
    X, y = make_separable(n=100, seed=2)
    grad = 0.5 - y  # p=0.5 start
    hess = np.full(100, 0.25)
    t_free = trees.grow_tree(X, grad, hess=hess, mode=trees.MODE_NEWTON,
                             max_depth=3, lam=1.0, gamma=0.0)
    t_tight = trees.grow_tree(X, grad, hess=hess, mode=trees.MODE_NEWTON,
                              max_depth=3, lam=1.0, gamma=1e9)
    assert t_free.n_nodes > 1
    assert t_tight.n_nodes == 1


def test_tiebreak_prefers_lowest_column():
    # two identical informative columns: the split must use column 0
    x = np.array([0.0, 0.0, 1.0, 1.0])
    X = np.column_stack([x, x])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    t = trees.fit_cart(X, y, max_depth=1)
    assert t.feature[0] == 0


def test_mtry_deterministic_given_pool():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(120, 10))
    y = (X[:, 3] > 0).astype(np.float64)
    pool = rng.integers(0, 2**32, size=2048, dtype=np.uint32)
    t1 = trees.grow_tree(X, y, mtry=3, rand_pool=pool.copy(), max_depth=5)
    t2 = trees.grow_tree(X, y, mtry=3, rand_pool=pool.copy(), max_depth=5)
    assert t1.to_dict() == t2.to_dict()


def test_single_row_gives_single_leaf():
    t = trees.grow_tree(np.array([[1.0, 2.0]]), np.array([1.0]))
    assert t.n_nodes == 1
    assert t.value[0] == 1.0


def test_pure_node_is_not_split():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1.0, 1.0, 1.0])
    t = trees.fit_cart(X, y)
    assert t.n_nodes == 1


def test_dict_round_trip():
    X, y = make_separable(n=60, seed=4)
    t = trees.fit_cart(X, y.astype(np.float64), max_depth=3)
    t2 = trees.Tree.from_dict(t.to_dict())
    grid = np.random.default_rng(0).normal(size=(50, X.shape[1]))
    np.testing.assert_array_equal(t.predict(grid), t2.predict(grid))


def test_bootstrap_duplicate_indices_supported():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(50, 4))
    y = (X[:, 0] > 0).astype(np.float64)
    idx = rng.integers(0, 50, size=50).astype(np.int64)
    t = trees.grow_tree(X, y, idx=idx, max_depth=6)
    # duplicated-row fit scores the selected rows correctly
    pred = t.predict(X[idx])
    assert np.mean((pred >= 0.5) == (y[idx] == 1)) > 0.9
