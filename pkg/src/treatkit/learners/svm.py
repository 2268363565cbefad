"""C-SVM with RBF kernel solved by sequential minimal optimization, plus
Platt sigmoid calibration fitted on training decision values."""

import numpy as np

from ..accel import jit
from . import _sigmoid


def rbf_kernel(A, B, gamma):
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    d2 = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


class SvmModel:
    def __init__(self, support_vectors, dual_coef, bias, gamma, platt_a, platt_b,
                 n_columns, converged=True):
        self.family = "svm_rbf"
        self.support_vectors = np.asarray(support_vectors, dtype=np.float64)
        self.dual_coef = np.asarray(dual_coef, dtype=np.float64)  # alpha_i * y_i
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.platt_a = float(platt_a)
        self.platt_b = float(platt_b)
        self.n_columns = int(n_columns)
        self.converged = converged

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_columns:
            raise ValueError("column-count mismatch")
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = rbf_kernel(X, self.support_vectors, self.gamma)
        return K @ self.dual_coef + self.bias

    def margin(self, X):
        f = self.decision_function(X)
        return -(self.platt_a * f + self.platt_b)

    def predict_proba(self, X):
        return _sigmoid(self.margin(X))

    def to_json(self):
        return {"family": self.family,
                "support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(), "bias": self.bias,
                "gamma": self.gamma, "platt_a": self.platt_a,
                "platt_b": self.platt_b, "n_columns": self.n_columns,
                "converged": self.converged}

    @classmethod
    def from_json(cls, d):
        return cls(d["support_vectors"], d["dual_coef"], d["bias"], d["gamma"],
                   d["platt_a"], d["platt_b"], d["n_columns"],
                   d.get("converged", True))


@jit
def _take_step(K, y_pm, alpha, errors, C, i1, i2, b):
    """One SMO pair update; returns (changed, new_b)."""
    eps = 1e-12
    if i1 == i2:
        return 0, b
    a1 = alpha[i1]
    a2 = alpha[i2]
    y1 = y_pm[i1]
    y2 = y_pm[i2]
    e1 = errors[i1]
    e2 = errors[i2]
    s = y1 * y2
    if s > 0:
        lo = max(0.0, a1 + a2 - C)
        hi = min(C, a1 + a2)
    else:
        lo = max(0.0, a2 - a1)
        hi = min(C, C + a2 - a1)
    if hi - lo < eps:
        return 0, b
    k11 = K[i1, i1]
    k12 = K[i1, i2]
    k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta > eps:
        a2_new = a2 + y2 * (e1 - e2) / eta
        if a2_new < lo:
            a2_new = lo
        elif a2_new > hi:
            a2_new = hi
    else:
        # objective flat or concave along the constraint; evaluate the ends
        f1 = y1 * (e1 - b) - a1 * k11 - s * a2 * k12
        f2 = y2 * (e2 - b) - s * a1 * k12 - a2 * k22
        l1 = a1 + s * (a2 - lo)
        h1 = a1 + s * (a2 - hi)
        obj_lo = (l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11
                  + 0.5 * lo * lo * k22 + s * lo * l1 * k12)
        obj_hi = (h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11
                  + 0.5 * hi * hi * k22 + s * hi * h1 * k12)
        if obj_lo < obj_hi - 1e-12:
            a2_new = lo
        elif obj_lo > obj_hi + 1e-12:
            a2_new = hi
        else:
            a2_new = a2
    if abs(a2_new - a2) < eps * (a2_new + a2 + eps):
        return 0, b
    a1_new = a1 + s * (a2 - a2_new)
    d1 = y1 * (a1_new - a1)
    d2 = y2 * (a2_new - a2)
    # choose b so a free vector's error becomes zero (f = sum a*y*K + b)
    b1 = b - e1 - d1 * k11 - d2 * k12
    b2 = b - e2 - d1 * k12 - d2 * k22
    if 0.0 < a1_new < C:
        b_new = b1
    elif 0.0 < a2_new < C:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)
    alpha[i1] = a1_new
    alpha[i2] = a2_new
    shift = b_new - b
    for i in range(K.shape[0]):
        errors[i] += d1 * K[i1, i] + d2 * K[i2, i] + shift
    return 1, b_new


@jit
def _examine(K, y_pm, alpha, errors, C, tol, i2, b):
    n = K.shape[0]
    y2 = y_pm[i2]
    a2 = alpha[i2]
    e2 = errors[i2]
    r2 = e2 * y2
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
        return 0, b
    non_bound = np.where((alpha > 0.0) & (alpha < C))[0]
    nb = non_bound.shape[0]
    if nb > 1:
        best = 0
        best_gap = -1.0
        for k in range(nb):
            gap = abs(errors[non_bound[k]] - e2)
            if gap > best_gap:
                best_gap = gap
                best = k
        changed, b = _take_step(K, y_pm, alpha, errors, C,
                                non_bound[best], i2, b)
        if changed:
            return 1, b
    if nb > 0:
        start = i2 % nb
        for k in range(nb):
            changed, b = _take_step(K, y_pm, alpha, errors, C,
                                    non_bound[(start + k) % nb], i2, b)
            if changed:
                return 1, b
    start = i2 % n
    for k in range(n):
        changed, b = _take_step(K, y_pm, alpha, errors, C,
                                (start + k) % n, i2, b)
        if changed:
            return 1, b
    return 0, b


@jit
def _smo_kernel(K, y_pm, C, tol, max_outer, max_iter):
    n = K.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    errors = -y_pm.copy()  # f = 0 initially
    examine_all = True
    passes = 0
    iters = 0
    while passes < max_outer and iters < max_iter:
        changed = 0
        if examine_all:
            for i in range(n):
                c, b = _examine(K, y_pm, alpha, errors, C, tol, i, b)
                changed += c
                iters += c
        else:
            for i in range(n):
                if 0.0 < alpha[i] < C:
                    c, b = _examine(K, y_pm, alpha, errors, C, tol, i, b)
                    changed += c
                    iters += c
        if examine_all:
            if changed == 0:
                return alpha, b, 1
            examine_all = False
        elif changed == 0:
            examine_all = True
            passes += 1
    return alpha, b, 1 if iters < max_iter else 0


def smo_solve(K, y_pm, C, tol=1e-3, max_passes=10, max_iter=200000):
    """Platt's SMO on a precomputed kernel matrix; y_pm in {-1, +1}.

    Returns (alpha, b, converged) with f(x) = sum alpha_i y_i K_i. + b.
    """
    alpha, b, ok = _smo_kernel(np.ascontiguousarray(K, dtype=np.float64),
                               np.asarray(y_pm, dtype=np.float64),
                               float(C), float(tol), 4 * int(max_passes),
                               int(max_iter))
    return alpha, float(b), bool(ok)


def fit_platt(decision_values, y, max_iter=100):
    """Robust Newton fit of P(y=1|f) = 1 / (1 + exp(A f + B))."""
    f = np.asarray(decision_values, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y == 1, hi, lo)
    a, b = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    sigma = 1e-12

    def nll(a, b):
        z = a * f + b
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)),
                                     (t - 1) * z + np.log1p(np.exp(z)))))

    fval = nll(a, b)
    for _ in range(max_iter):
        z = a * f + b
        p = _sigmoid(-z)
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-10 and abs(g2) < 1e-10:
            break
        h11 = float(np.sum(f * f * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(f * d2))
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        step = 1.0
        while step >= 1e-10:
            new = nll(a + step * da, b + step * db)
            if new < fval + 1e-4 * step * (g1 * da + g2 * db):
                a, b = a + step * da, b + step * db
                fval = new
                break
            step *= 0.5
        else:
            break
    return a, b


def default_gamma(X):
    var = float(np.mean(np.var(X, axis=0)))
    if var <= 0:
        var = 1.0
    return 1.0 / (X.shape[1] * var)


def fit_svm_rbf(X, y, hp, seed=0):
    n, p = X.shape
    gamma = hp["gamma"] if hp["gamma"] is not None else default_gamma(X)
    K = rbf_kernel(X, X, gamma)
    y_pm = 2.0 * y - 1.0
    alpha, b, converged = smo_solve(K, y_pm, hp["C"], tol=hp["tol"],
                                    max_passes=hp["max_passes"])
    decision = K @ (alpha * y_pm) + b
    a_platt, b_platt = fit_platt(decision, y)
    sv = alpha > 1e-12
    return SvmModel(X[sv], (alpha * y_pm)[sv], b, gamma, a_platt, b_platt, p,
                    converged)
