"""Logistic regression via IRLS and Gaussian linear discriminant analysis."""

import numpy as np

from . import _sigmoid


class LinearModel:
    def __init__(self, family, coef, intercept, n_columns, converged=True):
        self.family = family
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)
        self.n_columns = int(n_columns)
        self.converged = converged

    def margin(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_columns:
            raise ValueError("column-count mismatch")
        return X @ self.coef + self.intercept

    def predict_proba(self, X):
        return _sigmoid(self.margin(X))

    def to_json(self):
        return {"family": self.family, "coef": self.coef.tolist(),
                "intercept": self.intercept, "n_columns": self.n_columns,
                "converged": self.converged}

    @classmethod
    def from_json(cls, d):
        return cls(d["family"], d["coef"], d["intercept"], d["n_columns"],
                   d.get("converged", True))


def fit_logistic_regression(X, y, hp):
    """IRLS on the given design; ridge on slopes only, not the intercept."""
    n, p = X.shape
    Z = np.column_stack([np.ones(n), X])
    beta = np.zeros(p + 1)
    ridge = np.full(p + 1, hp["ridge"])
    ridge[0] = 0.0
    converged = False
    for _ in range(hp["max_iter"]):
        eta = Z @ beta
        mu = _sigmoid(eta)
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        grad = Z.T @ (y - mu) - ridge * beta
        hess = (Z * w[:, None]).T @ Z + np.diag(ridge)
        step = np.linalg.solve(hess, grad)
        beta += step
        if np.max(np.abs(step)) < hp["tol"]:
            converged = True
            break
    return LinearModel("lr", beta[1:], beta[0], p, converged)


def fit_lda(X, y, hp):
    """Class means with pooled ridge-stabilized covariance; log-odds margin."""
    n, p = X.shape
    X0 = X[y == 0]
    X1 = X[y == 1]
    mu0 = X0.mean(axis=0)
    mu1 = X1.mean(axis=0)
    c0 = (X0 - mu0).T @ (X0 - mu0)
    c1 = (X1 - mu1).T @ (X1 - mu1)
    pooled = (c0 + c1) / max(n - 2, 1)
    ridge = hp["ridge_scale"] * np.trace(pooled) / p
    if ridge <= 0:
        ridge = hp["ridge_scale"]
    pooled = pooled + ridge * np.eye(p)
    coef = np.linalg.solve(pooled, mu1 - mu0)
    intercept = -0.5 * (mu1 + mu0) @ coef + np.log(X1.shape[0] / X0.shape[0])
    return LinearModel("lda", coef, intercept, p)
