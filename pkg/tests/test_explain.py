import numpy as np
import pytest

from treatkit import explain, trees
from treatkit.learners import ClassifierSpec, fit
from treatkit.learners.ensembles import TreeEnsembleModel
from treatkit.learners.linear import LinearModel

from conftest import make_noisy


def random_ensemble(seed, n=60, p=6, family="gbm", n_trees=5, depth=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=n) > 0).astype(int)
    hp_key = {"gbm": "n_stages", "newton_boost": "n_rounds", "rf": "n_trees",
              "adaboost": "n_stumps"}[family]
    hp = {hp_key: n_trees}
    if family in ("gbm", "newton_boost", "rf"):
        hp["max_depth"] = depth
    model = fit(ClassifierSpec(family, hp, seed=seed), X, y)
    return model, X


def test_efficiency_axiom():
    model, X = random_ensemble(0)
    bg = X[:20]
    for i in range(5):
        e = explain.tree_shap(model, X[i], bg)
        assert abs(e.total - model.margin(X[i : i + 1])[0]) < 1e-9


def test_matches_exact_enumeration():
    for seed, family in [(1, "gbm"), (2, "rf"), (3, "newton_boost"),
                         (4, "adaboost")]:
        model, X = random_ensemble(seed, p=5, family=family)
        bg = X[:15]
        for i in range(3):
            fast = explain.tree_shap(model, X[i], bg)
            slow = explain.exact_shapley(model, X[i], bg)
            np.testing.assert_allclose(fast.phi, slow.phi, atol=1e-10)
            assert fast.base_value == pytest.approx(slow.base_value, abs=1e-10)


def test_dummy_axiom_unused_feature_gets_zero():
    # the model splits only on column 0; column 1 must get exactly zero
    t = trees.fit_cart(np.array([[0.0, 9.0], [1.0, -9.0]]),
                       np.array([0.0, 1.0]))
    model = TreeEnsembleModel("gbm", [t], 0.0, "log_odds", 2)
    rng = np.random.default_rng(0)
    bg = rng.normal(size=(10, 2))
    e = explain.tree_shap(model, np.array([0.7, 3.0]), bg)
    assert e.phi[1] == 0.0


def test_symmetry_axiom():
    # two trees, identical structure on interchangeable columns, symmetric
    # instance and background: attributions must match
    t0 = trees.fit_cart(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.0, 1.0]))
    t1 = trees.fit_cart(np.array([[0.0, 0.0], [0.0, 1.0]]).copy(),
                        np.array([0.0, 1.0]))
    assert t0.feature[0] == 0 and t1.feature[0] == 1
    model = TreeEnsembleModel("gbm", [t0, t1], 0.0, "log_odds", 2)
    bg = np.array([[0.0, 0.0], [1.0, 1.0]])
    e = explain.tree_shap(model, np.array([1.0, 1.0]), bg)
    assert e.phi[0] == pytest.approx(e.phi[1], abs=1e-12)


def test_background_row_identical_to_instance_contributes_zero():
    model, X = random_ensemble(5)
    e = explain.tree_shap(model, X[0], X[0:1])
    assert np.allclose(e.phi, 0.0)
    assert e.base_value == pytest.approx(model.margin(X[0:1])[0])


def test_exact_shapley_on_linear_model_is_closed_form():
    coef = np.array([1.5, -2.0, 0.5])
    model = LinearModel("lr", coef, 0.3, 3)
    rng = np.random.default_rng(1)
    Z = rng.normal(size=(30, 3))
    x = rng.normal(size=3)
    e = explain.exact_shapley(model, x, Z)
    expected = coef * (x - Z.mean(axis=0))
    np.testing.assert_allclose(e.phi, expected, atol=1e-10)


def test_sampled_shapley_converges_to_exact():
    coef = np.array([1.0, -1.0, 2.0, 0.0])
    model = LinearModel("lr", coef, 0.0, 4)
    rng = np.random.default_rng(2)
    Z = rng.normal(size=(40, 4))
    x = rng.normal(size=4)
    exact = explain.exact_shapley(model, x, Z)
    approx = explain.sampled_shapley(model, x, Z, permutations=4000, seed=0)
    np.testing.assert_allclose(approx.phi, exact.phi, atol=0.15)
    assert approx.std_error is not None
    assert np.all(approx.std_error >= 0)


def test_sampled_shapley_efficiency_holds_per_permutation():
    model, X = random_ensemble(6)
    e = explain.sampled_shapley(model, X[0], X[:10], permutations=50, seed=1)
    # each permutation telescopes, so the mean satisfies efficiency exactly
    # against the sampled backgrounds
    assert np.isfinite(e.total)


def test_validation_errors():
    model, X = random_ensemble(7)
    with pytest.raises(ValueError):
        explain.tree_shap(model, X[0], X[:0])
    with pytest.raises(ValueError):
        explain.exact_shapley(model, np.zeros(20), np.zeros((3, 20)))
    with pytest.raises(ValueError):
        explain.sampled_shapley(model, X[0], X[:5], permutations=0)
    lin = LinearModel("lr", np.ones(3), 0.0, 3)
    with pytest.raises(ValueError):
        explain.tree_shap(lin, np.zeros(3), np.zeros((2, 3)))


def test_phi_by_feature_groups_lineage():
    e = explain.ShapExplanation("id", 0.5, np.array([0.1, 0.2, 0.3]),
                                [("A", "x"), ("A", "y"), ("B", "numeric")])
    grouped = e.phi_by_feature
    assert grouped["A"] == pytest.approx(0.3)
    assert grouped["B"] == pytest.approx(0.3)
    assert e.total == pytest.approx(1.1)


def test_shap_summary_ordering_and_records():
    lineage = [("A", "numeric"), ("B", "numeric")]
    exps = [explain.ShapExplanation(i, 0.0, np.array([0.1 * i, -0.5]), lineage)
            for i in range(4)]
    X = np.arange(8, dtype=float).reshape(4, 2)
    s = explain.shap_summary(exps, X)
    assert s.features[0] == "B"  # larger mean |phi|
    assert s.mean_abs["B"] == pytest.approx(0.5)
    assert len(s.records) == 8
    values = [r[3] for r in s.records]
    assert min(values) == 0.0 and max(values) == 1.0
    with pytest.raises(ValueError):
        explain.shap_summary([])


def test_explain_dataset_and_writers(tmp_path):
    model, X = random_ensemble(8)
    lineage = [(f"F{j}", "numeric") for j in range(X.shape[1])]
    exps = explain.explain_dataset(model, X[:4], X[:15], lineage, method="tree",
                                   row_ids=[f"R{i}" for i in range(4)])
    assert [e.instance_id for e in exps] == ["R0", "R1", "R2", "R3"]
    s = explain.shap_summary(exps, X[:4])
    explain.write_explanations_csv(exps, str(tmp_path / "e.csv"))
    explain.write_summary_json(s, str(tmp_path / "s.json"))
    import csv as csv_mod
    import json

    with open(tmp_path / "e.csv", newline="") as fh:
        rows = list(csv_mod.DictReader(fh))
    assert len(rows) == 4 * X.shape[1]
    payload = json.loads((tmp_path / "s.json").read_text())
    assert [p["rank"] for p in payload] == list(range(1, X.shape[1] + 1))
