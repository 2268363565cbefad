"""Seven binary classifiers behind one fit/score contract.

All models expose ``margin(X)`` (real-valued score), ``predict_proba(X)``
(P(chemotherapy)) and JSON round-tripping. Tree families produce additive
ensembles usable by the exact Shapley traversal.
"""

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("adaboost", "gbm", "lda", "lr", "rf", "svm_rbf", "newton_boost")
TREE_FAMILIES = ("adaboost", "gbm", "rf", "newton_boost")

DEFAULT_HYPERPARAMETERS = {
    "rf": {"n_trees": 500, "mtry": None, "max_depth": None, "min_leaf": 1},
    "gbm": {"n_stages": 100, "max_depth": 3, "learning_rate": 0.1, "min_leaf": 1},
    "newton_boost": {"n_rounds": 100, "max_depth": 6, "learning_rate": 0.3,
                     "lam": 1.0, "gamma": 0.0, "min_child_hessian": 1.0},
    "adaboost": {"n_stumps": 100},
    "lr": {"ridge": 1e-6, "max_iter": 100, "tol": 1e-8},
    "lda": {"ridge_scale": 1e-6},
    "svm_rbf": {"C": 1.0, "gamma": None, "tol": 1e-3, "max_passes": 10},
}


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        unknown = set(self.hyperparameters) - set(DEFAULT_HYPERPARAMETERS[self.family])
        if unknown:
            raise ValueError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        hp = self.resolved()
        for key in ("n_trees", "n_stages", "n_rounds", "n_stumps", "max_iter"):
            if key in hp and hp[key] < 1:
                raise ValueError(f"{self.family}: {key} must be >= 1")
        for key in ("learning_rate", "C", "ridge", "tol"):
            if key in hp and hp[key] is not None and hp[key] <= 0:
                raise ValueError(f"{self.family}: {key} must be > 0")

    def resolved(self):
        hp = dict(DEFAULT_HYPERPARAMETERS[self.family])
        hp.update(self.hyperparameters)
        return hp

    def to_json(self):
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters),
                "seed": self.seed}

    @classmethod
    def from_json(cls, d):
        return cls(d["family"], dict(d.get("hyperparameters", {})),
                   int(d.get("seed", 0)))


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    # strictly inside (0, 1) even for saturated margins
    return np.clip(out, 1e-15, 1.0 - 1e-15)


def _check_training_inputs(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y differ in length")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature values")
    if len(np.unique(y)) < 2:
        raise ValueError("training set contains a single class")
    return X, y.astype(np.int64)


def fit(spec, X, y):
    """Train one model; deterministic given spec.seed."""
    from . import ensembles, linear, svm

    X, y = _check_training_inputs(X, y)
    hp = spec.resolved()
    fam = spec.family
    if fam == "rf":
        return ensembles.fit_random_forest(X, y, hp, spec.seed)
    if fam == "gbm":
        return ensembles.fit_gbm(X, y, hp)
    if fam == "newton_boost":
        return ensembles.fit_newton_boost(X, y, hp)
    if fam == "adaboost":
        return ensembles.fit_adaboost(X, y, hp)
    if fam == "lr":
        return linear.fit_logistic_regression(X, y, hp)
    if fam == "lda":
        return linear.fit_lda(X, y, hp)
    return svm.fit_svm_rbf(X, y, hp, spec.seed)


def model_from_json(d):
    from . import ensembles, linear, svm

    fam = d["family"]
    if fam in TREE_FAMILIES:
        return ensembles.TreeEnsembleModel.from_json(d)
    if fam == "lr" or fam == "lda":
        return linear.LinearModel.from_json(d)
    if fam == "svm_rbf":
        return svm.SvmModel.from_json(d)
    raise ValueError(f"unknown family {fam!r}")
