import numpy as np
import pytest

from treatkit import learners
from treatkit.learners import (ClassifierSpec, FAMILIES, TREE_FAMILIES, fit,
                               model_from_json)
from treatkit.learners.linear import fit_lda, fit_logistic_regression

from conftest import make_noisy, make_separable


# --------------------------------------------------------------------------
# spec validation

def test_spec_rejects_unknown_family():
    with pytest.raises(ValueError):
        ClassifierSpec("xgboost")


def test_spec_rejects_unknown_hyperparameter():
    with pytest.raises(ValueError):
        ClassifierSpec("rf", {"bogus": 1})


def test_spec_rejects_non_positive_counts():
    with pytest.raises(ValueError):
        ClassifierSpec("gbm", {"n_stages": 0})
    with pytest.raises(ValueError):
        ClassifierSpec("gbm", {"learning_rate": -0.1})


def test_spec_resolved_merges_defaults():
    hp = ClassifierSpec("rf", {"n_trees": 10}).resolved()
    assert hp["n_trees"] == 10
    assert hp["min_leaf"] == 1


# --------------------------------------------------------------------------
# shared contract across all seven families

FAST_HP = {
    "rf": {"n_trees": 30},
    "gbm": {"n_stages": 30},
    "newton_boost": {"n_rounds": 30},
    "adaboost": {"n_stumps": 50},
    "lr": {},
    "lda": {},
    "svm_rbf": {"C": 10.0, "gamma": 0.5},
}


@pytest.mark.parametrize("family", FAMILIES)
def test_separable_data_is_learned(family):
    X, y = make_separable(n=200, seed=3)
    model = fit(ClassifierSpec(family, FAST_HP[family], seed=1), X, y)
    proba = model.predict_proba(X)
    assert np.mean((proba >= 0.5) == (y == 1)) >= 0.95
    assert np.all((proba > 0.0) & (proba < 1.0))
    assert np.isfinite(model.margin(X)).all()


@pytest.mark.parametrize("family", FAMILIES)
def test_fit_is_deterministic(family):
    X, y = make_noisy(n=150, seed=4)
    a = fit(ClassifierSpec(family, FAST_HP[family], seed=9), X, y)
    b = fit(ClassifierSpec(family, FAST_HP[family], seed=9), X, y)
    np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


@pytest.mark.parametrize("family", FAMILIES)
def test_json_round_trip_preserves_predictions(family):
    import json

    X, y = make_noisy(n=120, seed=5)
    model = fit(ClassifierSpec(family, FAST_HP[family], seed=2), X, y)
    clone = model_from_json(json.loads(json.dumps(model.to_json())))
    np.testing.assert_allclose(model.predict_proba(X), clone.predict_proba(X),
                               rtol=0, atol=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_single_class_training_rejected(family):
    X = np.random.default_rng(0).normal(size=(20, 3))
    with pytest.raises(ValueError, match="single class"):
        fit(ClassifierSpec(family, FAST_HP[family]), X, np.ones(20, dtype=int))


def test_non_finite_features_rejected():
    X = np.ones((10, 2))
    X[3, 1] = np.nan
    y = np.array([0, 1] * 5)
    with pytest.raises(ValueError, match="non-finite"):
        fit(ClassifierSpec("lr"), X, y)


def test_column_count_mismatch_at_predict():
    X, y = make_separable(n=50, seed=6)
    model = fit(ClassifierSpec("lr"), X, y)
    with pytest.raises(ValueError, match="column-count"):
        model.predict_proba(X[:, :-1])


# --------------------------------------------------------------------------
# family-specific behavior

def test_lr_gradient_vanishes_at_solution():
    X, y = make_noisy(n=200, seed=7)
    model = fit(ClassifierSpec("lr"), X, y)
    beta = np.concatenate([[model.intercept], model.coef])
    Z = np.column_stack([np.ones(len(y)), X])
    mu = 1.0 / (1.0 + np.exp(-(Z @ beta)))
    ridge = np.full(beta.size, 1e-6)
    ridge[0] = 0.0
    grad = Z.T @ (y - mu) - ridge * beta
    assert np.max(np.abs(grad)) < 1e-6
    assert model.converged


def test_lr_label_swap_negates_margin():
    X, y = make_noisy(n=150, seed=8)
    m_pos = fit(ClassifierSpec("lr"), X, y)
    m_neg = fit(ClassifierSpec("lr"), X, 1 - y)
    np.testing.assert_allclose(m_pos.margin(X), -m_neg.margin(X), atol=1e-6)


def test_lda_closed_form_on_toy():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [4.0, 1.0], [5.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    model = fit_lda(X, y, {"ridge_scale": 1e-6})
    # equal priors: log-odds is zero at the midpoint of the class means
    mid = 0.5 * (X[:2].mean(axis=0) + X[2:].mean(axis=0))
    assert model.margin(mid[None, :])[0] == pytest.approx(0.0, abs=1e-6)
    assert model.margin(X[3:4])[0] > 0 > model.margin(X[0:1])[0]


def test_lda_label_swap_negates_margin():
    X, y = make_noisy(n=150, seed=9)
    m_pos = fit_lda(X, y, {"ridge_scale": 1e-6})
    m_neg = fit_lda(X, 1 - y, {"ridge_scale": 1e-6})
    np.testing.assert_allclose(m_pos.margin(X), -m_neg.margin(X), atol=1e-8)


def _train_log_loss(model, X, y):
    p = model.predict_proba(X)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


@pytest.mark.parametrize("family,count_key",
                         [("gbm", "n_stages"), ("newton_boost", "n_rounds")])
def test_boosting_loss_decreases_with_more_stages(family, count_key):
    X, y = make_noisy(n=150, seed=10)
    losses = [
        _train_log_loss(fit(ClassifierSpec(family, {count_key: n}), X, y), X, y)
        for n in (1, 5, 20, 60)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))


def test_gbm_base_margin_is_log_odds_of_base_rate():
    X, y = make_noisy(n=100, seed=11)
    model = fit(ClassifierSpec("gbm", {"n_stages": 1}), X, y)
    p0 = np.mean(y)
    assert model.base_margin == pytest.approx(np.log(p0 / (1 - p0)), abs=1e-12)


def test_rf_margin_is_probability_score():
    X, y = make_noisy(n=100, seed=12)
    model = fit(ClassifierSpec("rf", {"n_trees": 20}, seed=3), X, y)
    assert model.margin_kind == "score"
    m = model.margin(X)
    assert np.all((m >= -1e-9) & (m <= 1.0 + 1e-9))  # averaged leaf fractions
    np.testing.assert_allclose(model.predict_proba(X),
                               np.clip(m, 1e-9, 1 - 1e-9))


def test_rf_seed_changes_forest():
    X, y = make_noisy(n=100, seed=13)
    a = fit(ClassifierSpec("rf", {"n_trees": 20}, seed=1), X, y)
    b = fit(ClassifierSpec("rf", {"n_trees": 20}, seed=2), X, y)
    assert not np.array_equal(a.predict_proba(X), b.predict_proba(X))


def test_adaboost_alpha_and_additivity():
    X, y = make_separable(n=80, seed=14)
    model = fit(ClassifierSpec("adaboost", {"n_stumps": 5}), X, y)
    # every stump contributes +-alpha_t; margin equals sum of leaf values
    total = np.zeros(len(y))
    for t in model.trees:
        total += t.predict(X)
    np.testing.assert_allclose(model.margin(X), total, atol=1e-12)
    leaf_vals = np.abs(model.trees[0].value[model.trees[0].feature == -1])
    assert np.allclose(leaf_vals, leaf_vals[0])  # symmetric +-alpha leaves


def test_adaboost_stops_on_random_labels():
    # a single binary feature: after reweighting, no stump beats chance
    rng = np.random.default_rng(15)
    X = rng.integers(0, 2, size=(60, 1)).astype(float)
    y = rng.integers(0, 2, size=60)
    model = fit(ClassifierSpec("adaboost", {"n_stumps": 100}), X, y)
    assert len(model.trees) < 100


def test_tree_families_report_membership():
    assert set(TREE_FAMILIES) <= set(FAMILIES)
    for fam in TREE_FAMILIES:
        X, y = make_separable(n=60, seed=16)
        model = fit(ClassifierSpec(fam, FAST_HP[fam], seed=1), X, y)
        assert hasattr(model, "trees")


def test_model_from_json_unknown_family():
    with pytest.raises(ValueError):
        model_from_json({"family": "nope"})
