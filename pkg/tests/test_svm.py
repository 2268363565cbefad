import numpy as np
import pytest

from treatkit.learners import ClassifierSpec, fit
from treatkit.learners.svm import (default_gamma, fit_platt, rbf_kernel,
                                   smo_solve)

from conftest import make_noisy


def dual_objective(alpha, K, y_pm):
    q = (alpha * y_pm) @ K @ (alpha * y_pm)
    return float(alpha.sum() - 0.5 * q)


def project_box_hyperplane(v, y_pm, C):
    """Exact Euclidean projection onto {0 <= a <= C, a.y = 0}.

    The projection is clip(v - lam*y, 0, C) where lam solves
    clip(v - lam*y).y = 0; the left side is nonincreasing in lam, so
    bisection finds it.
    """
    def h(lam):
        return float(np.clip(v - lam * y_pm, 0.0, C) @ y_pm)

    lo, hi = -1e8, 1e8
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y_pm, 0.0, C)


def projected_gradient_solve(K, y_pm, C, iters=20000, lr=None):
    """Slow projected-gradient-ascent oracle for the SVM dual."""
    n = K.shape[0]
    Q = (y_pm[:, None] * y_pm[None, :]) * K
    if lr is None:
        lr = 1.0 / max(np.linalg.eigvalsh(Q).max(), 1.0)
    alpha = project_box_hyperplane(np.zeros(n), y_pm, C)
    for _ in range(iters):
        grad = 1.0 - Q @ alpha
        alpha = project_box_hyperplane(alpha + lr * grad, y_pm, C)
    return alpha


def test_rbf_kernel_properties():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 3))
    K = rbf_kernel(A, A, 0.7)
    assert np.allclose(np.diag(K), 1.0)
    assert np.allclose(K, K.T)
    assert K.min() > 0.0
    w = np.linalg.eigvalsh(K)
    assert w.min() > -1e-10  # positive semi-definite


def test_xor_is_solved():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    model = fit(ClassifierSpec("svm_rbf", {"C": 10.0, "gamma": 1.0}), X, y)
    pred = (model.predict_proba(X) >= 0.5).astype(int)
    assert np.array_equal(pred, y)


def test_smo_satisfies_kkt_conditions():
    X, y = make_noisy(n=60, seed=1)
    y_pm = 2.0 * y - 1.0
    C, tol = 1.0, 1e-3
    K = rbf_kernel(X, X, 0.3)
    alpha, b, converged = smo_solve(K, y_pm, C, tol=tol)
    assert converged
    assert np.all(alpha >= -1e-12) and np.all(alpha <= C + 1e-12)
    f = K @ (alpha * y_pm) + b
    margins = y_pm * f
    # KKT at tolerance: free vectors sit on the margin, bound vectors off it
    free = (alpha > 1e-8) & (alpha < C - 1e-8)
    assert np.all(np.abs(margins[free] - 1.0) <= tol + 1e-6)
    assert np.all(margins[alpha <= 1e-8] >= 1.0 - tol - 1e-6)
    assert np.all(margins[alpha >= C - 1e-8] <= 1.0 + tol + 1e-6)


def test_smo_matches_projected_gradient_objective():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 2))
    y_pm = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0, 1.0, -1.0)
    C = 1.0
    K = rbf_kernel(X, X, 0.5)
    alpha, _, _ = smo_solve(K, y_pm, C, tol=1e-4)
    ref = projected_gradient_solve(K, y_pm, C)
    assert abs(float(alpha @ y_pm)) < 1e-6
    obj = dual_objective(alpha, K, y_pm)
    obj_ref = dual_objective(ref, K, y_pm)
    assert obj >= obj_ref - 1e-3


def test_platt_recovers_sigmoid_parameters():
    rng = np.random.default_rng(3)
    f = rng.normal(size=4000) * 2.0
    true_a, true_b = -1.3, 0.4
    p = 1.0 / (1.0 + np.exp(true_a * f + true_b))
    y = (rng.random(4000) < p).astype(int)
    a, b = fit_platt(f, y)
    assert a == pytest.approx(true_a, abs=0.15)
    assert b == pytest.approx(true_b, abs=0.15)


def test_margin_is_monotone_in_decision_value():
    X, y = make_noisy(n=80, seed=4)
    model = fit(ClassifierSpec("svm_rbf", {}), X, y)
    f = model.decision_function(X)
    m = model.margin(X)
    order = np.argsort(f)
    assert model.platt_a < 0  # higher decision value -> higher probability
    assert np.all(np.diff(m[order]) >= -1e-12)


def test_default_gamma_scaling():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 4))
    g = default_gamma(X)
    assert g == pytest.approx(1.0 / (4 * np.mean(np.var(X, axis=0))))
    assert default_gamma(np.zeros((10, 2))) == pytest.approx(0.5)


def test_no_support_vectors_degenerates_to_bias():
    from treatkit.learners.svm import SvmModel

    m = SvmModel(np.zeros((0, 2)), np.zeros(0), 0.25, 1.0, -1.0, 0.0, 2)
    assert np.allclose(m.decision_function(np.zeros((3, 2))), 0.25)
