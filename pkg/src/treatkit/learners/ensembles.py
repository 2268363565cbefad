"""Tree-ensemble families: random forest, gradient boosting, second-order
boosting, and discrete AdaBoost.

Every fitted ensemble is additive: margin(x) = base_margin + sum of tree
outputs, with learning rates and averaging folded into the stored leaf
values. Margin semantics differ by family: boosting margins are log-odds,
the forest margin is the averaged positive-class fraction.
"""

import numpy as np

from .. import trees
from . import _sigmoid

LEAF_VALUE_CAP = 10.0


class TreeEnsembleModel:
    def __init__(self, family, tree_list, base_margin, margin_kind, n_columns,
                 warning=None):
        self.family = family
        self.trees = tree_list
        self.base_margin = float(base_margin)
        self.margin_kind = margin_kind  # "log_odds" | "score"
        self.n_columns = int(n_columns)
        self.warning = warning

    def margin(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.shape[1] != self.n_columns:
            raise ValueError("column-count mismatch")
        out = np.full(X.shape[0], self.base_margin)
        for t in self.trees:
            trees._predict_tree(t.feature, t.threshold, t.left, t.right, t.value,
                                X, out)
        return out

    def predict_proba(self, X):
        m = self.margin(X)
        if self.margin_kind == "score":
            return np.clip(m, 1e-9, 1.0 - 1e-9)
        return _sigmoid(m)

    def to_json(self):
        return {
            "family": self.family,
            "base_margin": self.base_margin,
            "margin_kind": self.margin_kind,
            "n_columns": self.n_columns,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["family"], [trees.Tree.from_dict(t) for t in d["trees"]],
                   d["base_margin"], d["margin_kind"], d["n_columns"])


def _base_log_odds(y):
    p0 = min(max(float(np.mean(y)), 1e-12), 1.0 - 1e-12)
    return np.log(p0 / (1.0 - p0))


def fit_random_forest(X, y, hp, seed):
    n, p = X.shape
    mtry = hp["mtry"] if hp["mtry"] is not None else max(1, int(np.sqrt(p)))
    max_depth = hp["max_depth"] if hp["max_depth"] is not None else 10**9
    n_trees = hp["n_trees"]
    rng = np.random.default_rng(seed)
    yf = y.astype(np.float64)
    scale = 1.0 / n_trees
    forest = []
    pool_size = 4 * n * max(1, mtry) + 64
    for _ in range(n_trees):
        idx = rng.integers(0, n, size=n).astype(np.int64)
        pool = rng.integers(0, 2**32, size=pool_size, dtype=np.uint32)
        t = trees.grow_tree(X, yf, idx=idx, mode=trees.MODE_GINI,
                            max_depth=max_depth, min_leaf=hp["min_leaf"],
                            mtry=mtry, rand_pool=pool)
        t.value *= scale
        forest.append(t)
    return TreeEnsembleModel("rf", forest, 0.0, "score", p)


def fit_gbm(X, y, hp):
    n, p = X.shape
    yf = y.astype(np.float64)
    base = _base_log_odds(y)
    margin = np.full(n, base)
    stages = []
    for _ in range(hp["n_stages"]):
        prob = _sigmoid(margin)
        resid = yf - prob
        hess = prob * (1.0 - prob)
        t = trees.grow_tree(X, resid, hess=hess, mode=trees.MODE_SSE,
                            max_depth=hp["max_depth"], min_leaf=hp["min_leaf"])
        np.clip(t.value, -LEAF_VALUE_CAP, LEAF_VALUE_CAP, out=t.value)
        t.value *= hp["learning_rate"]
        update = np.zeros(n)
        trees._predict_tree(t.feature, t.threshold, t.left, t.right, t.value,
                            X, update)
        margin += update
        stages.append(t)
    return TreeEnsembleModel("gbm", stages, base, "log_odds", p)


def fit_newton_boost(X, y, hp):
    n, p = X.shape
    yf = y.astype(np.float64)
    base = _base_log_odds(y)
    margin = np.full(n, base)
    rounds = []
    for _ in range(hp["n_rounds"]):
        prob = _sigmoid(margin)
        grad = prob - yf
        hess = prob * (1.0 - prob)
        t = trees.grow_tree(X, grad, hess=hess, mode=trees.MODE_NEWTON,
                            max_depth=hp["max_depth"], min_leaf=1,
                            lam=hp["lam"], gamma=hp["gamma"],
                            min_child_h=hp["min_child_hessian"])
        np.clip(t.value, -LEAF_VALUE_CAP, LEAF_VALUE_CAP, out=t.value)
        t.value *= hp["learning_rate"]
        update = np.zeros(n)
        trees._predict_tree(t.feature, t.threshold, t.left, t.right, t.value,
                            X, update)
        margin += update
        rounds.append(t)
    return TreeEnsembleModel("newton_boost", rounds, base, "log_odds", p)


def fit_adaboost(X, y, hp):
    n, p = X.shape
    yf = y.astype(np.float64)
    sign_y = 2.0 * yf - 1.0
    w = np.full(n, 1.0 / n)
    stumps = []
    warning = None
    for _ in range(hp["n_stumps"]):
        t = trees.grow_tree(X, yf, weights=w, mode=trees.MODE_GINI, max_depth=1)
        frac = np.zeros(n)
        trees._predict_tree(t.feature, t.threshold, t.left, t.right, t.value,
                            X, frac)
        h = np.where(frac >= 0.5, 1.0, -1.0)
        miss = h != sign_y
        eps = float(np.sum(w[miss]))
        if eps >= 0.5:
            if not stumps:
                warning = "first stump no better than chance"
            break
        alpha = 0.5 * np.log((1.0 - eps) / max(eps, 1e-12))
        # rewrite leaves to alpha * h(x) so the ensemble is additive
        t.value = np.where(t.value >= 0.5, alpha, -alpha) * (t.feature == trees.LEAF)
        stumps.append(t)
        if eps == 0.0:
            break
        w[miss] *= np.exp(alpha)
        w /= w.sum()
    return TreeEnsembleModel("adaboost", stumps, 0.0, "log_odds", p,
                             warning=warning)
