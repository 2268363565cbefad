"""Shapley-value attributions of model margins.

``tree_shap`` computes exact interventional Shapley values for additive
tree ensembles by dual traversal: for each background row, every leaf
reachable by mixing the instance's and the background row's feature values
is enumerated together with the features that must be present (followed the
instance) or absent (followed the background). Such a conjunction game has
closed-form Shapley values, summed over leaves, background rows, and trees.

``exact_shapley`` is the exponential-enumeration oracle for any model;
``sampled_shapley`` is the Monte Carlo fallback for non-tree families.
All attributions are computed in margin space (log-odds for boosting and
linear families, averaged class fraction for forests).
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .accel import jit
from .learners import TREE_FAMILIES


@jit
def _tree_shap_one_tree(feature, threshold, left, right, value, x, Z, fact, phi):
    """Accumulate per-column Shapley contributions of one tree over all
    background rows (not yet divided by the number of rows)."""
    p = x.shape[0]
    cap = feature.shape[0] + 2
    st_node = np.empty(cap, dtype=np.int64)
    st_a = np.empty(cap, dtype=np.int64)
    st_b = np.empty(cap, dtype=np.int64)
    st_state = np.zeros((cap, p), dtype=np.int8)
    work = np.zeros(p, dtype=np.int8)

    for zi in range(Z.shape[0]):
        sp = 1
        st_node[0] = 0
        st_a[0] = 0
        st_b[0] = 0
        st_state[0, :] = 0
        while sp > 0:
            sp -= 1
            node = st_node[sp]
            a = st_a[sp]
            b = st_b[sp]
            for j in range(p):
                work[j] = st_state[sp, j]
            while feature[node] >= 0:
                j = feature[node]
                x_left = x[j] < threshold[node]
                z_left = Z[zi, j] < threshold[node]
                if x_left == z_left:
                    node = left[node] if x_left else right[node]
                elif work[j] == 1:
                    node = left[node] if x_left else right[node]
                elif work[j] == -1:
                    node = left[node] if z_left else right[node]
                else:
                    # unseen divergent feature: branch into both coalitions
                    st_node[sp] = left[node] if z_left else right[node]
                    st_a[sp] = a
                    st_b[sp] = b + 1
                    for t in range(p):
                        st_state[sp, t] = work[t]
                    st_state[sp, j] = -1
                    sp += 1
                    work[j] = 1
                    a += 1
                    node = left[node] if x_left else right[node]
            if a > 0 or b > 0:
                v = value[node]
                if a > 0:
                    w_in = v * fact[a - 1] * fact[b] / fact[a + b]
                else:
                    w_in = 0.0
                if b > 0:
                    w_out = v * fact[a] * fact[b - 1] / fact[a + b]
                else:
                    w_out = 0.0
                for j in range(p):
                    if work[j] == 1:
                        phi[j] += w_in
                    elif work[j] == -1:
                        phi[j] -= w_out


@dataclass
class ShapExplanation:
    instance_id: object
    base_value: float
    phi: np.ndarray  # per encoded column
    lineage: list  # (source feature, category or "numeric") per column
    std_error: np.ndarray | None = None

    @property
    def phi_by_feature(self):
        out = {}
        for j, (feat, _) in enumerate(self.lineage):
            out[feat] = out.get(feat, 0.0) + float(self.phi[j])
        return out

    @property
    def total(self):
        return self.base_value + float(np.sum(self.phi))


def _factorials(p):
    return np.array([math.factorial(i) for i in range(p + 2)], dtype=np.float64)


def tree_shap(model, x, background, lineage=None, instance_id=None):
    """Exact interventional Shapley values of a tree-ensemble margin."""
    if model.family not in TREE_FAMILIES:
        raise ValueError(f"tree_shap needs a tree ensemble, got {model.family}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    Z = np.ascontiguousarray(background, dtype=np.float64)
    if Z.shape[0] == 0:
        raise ValueError("empty background")
    p = x.shape[0]
    fact = _factorials(p)
    phi = np.zeros(p)
    for t in model.trees:
        _tree_shap_one_tree(t.feature, t.threshold, t.left, t.right, t.value,
                            x, Z, fact, phi)
    phi /= Z.shape[0]
    base = float(np.mean(model.margin(Z)))
    return ShapExplanation(instance_id, base, phi,
                           list(lineage) if lineage else [("", "")] * p)


def exact_shapley(model, x, background, max_features=15, lineage=None,
                  instance_id=None):
    """Shapley values by full coalition enumeration; interventional value
    function = mean margin with out-of-coalition columns from background."""
    x = np.asarray(x, dtype=np.float64)
    Z = np.asarray(background, dtype=np.float64)
    p = x.shape[0]
    if p > max_features:
        raise ValueError(f"{p} columns exceeds enumeration cap {max_features}")
    n_masks = 1 << p
    nz = Z.shape[0]
    v = np.empty(n_masks)
    for mask in range(n_masks):
        hybrid = Z.copy()
        for j in range(p):
            if mask >> j & 1:
                hybrid[:, j] = x[j]
        v[mask] = float(np.mean(model.margin(hybrid)))
    fact = _factorials(p)
    phi = np.zeros(p)
    for mask in range(n_masks):
        s = bin(mask).count("1")
        w = fact[s] * fact[p - s - 1] / fact[p]
        for j in range(p):
            if not mask >> j & 1:
                phi[j] += w * (v[mask | (1 << j)] - v[mask])
    return ShapExplanation(instance_id, v[0], phi,
                           list(lineage) if lineage else [("", "")] * p)


def sampled_shapley(model, x, background, permutations=200, seed=0,
                    lineage=None, instance_id=None):
    """Monte Carlo permutation estimate with per-feature standard errors."""
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    Z = np.asarray(background, dtype=np.float64)
    p = x.shape[0]
    rng = np.random.default_rng(seed)
    contrib = np.zeros((permutations, p))
    base_samples = np.zeros(permutations)
    for m in range(permutations):
        perm = rng.permutation(p)
        z = Z[rng.integers(0, Z.shape[0])]
        # margins of the p+1 prefixes of the permutation path in one call
        path = np.tile(z, (p + 1, 1))
        cur = z.copy()
        for step, j in enumerate(perm, start=1):
            cur[j] = x[j]
            path[step] = cur
        margins = model.margin(path)
        base_samples[m] = margins[0]
        for step, j in enumerate(perm, start=1):
            contrib[m, j] = margins[step] - margins[step - 1]
    phi = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / math.sqrt(permutations) \
        if permutations > 1 else np.zeros(p)
    return ShapExplanation(instance_id, float(base_samples.mean()), phi,
                           list(lineage) if lineage else [("", "")] * p, se)


def explain_dataset(model, X, background, lineage, method="tree",
                    permutations=200, seed=0, row_ids=None):
    out = []
    for i in range(X.shape[0]):
        rid = row_ids[i] if row_ids else i
        if method == "tree":
            out.append(tree_shap(model, X[i], background, lineage, rid))
        else:
            out.append(sampled_shapley(model, X[i], background, permutations,
                                       seed + i, lineage, rid))
    return out


@dataclass
class ShapSummary:
    features: list  # descending by mean |phi|
    mean_abs: dict  # feature -> mean absolute grouped phi
    records: list  # (feature, instance_id, phi, normalized feature value)


def shap_summary(explanations, X=None):
    """Mean absolute per-source-feature attribution with beeswarm records."""
    if not explanations:
        raise ValueError("no explanations")
    lineage = explanations[0].lineage
    feats = list(dict.fromkeys(f for f, _ in lineage))
    groups = {f: [j for j, (g, _) in enumerate(lineage) if g == f] for f in feats}

    # representative per-feature value for coloring: numeric value, or the
    # index of the active category, min-max normalized over instances
    values = None
    if X is not None:
        values = np.zeros((len(explanations), len(feats)))
        for fi, f in enumerate(feats):
            cols = groups[f]
            kinds = [lineage[j][1] for j in cols]
            if kinds == ["numeric"]:
                values[:, fi] = X[:, cols[0]]
            else:
                values[:, fi] = np.argmax(X[:, cols], axis=1)
        lo = values.min(axis=0)
        rng_ = values.max(axis=0) - lo
        rng_[rng_ == 0] = 1.0
        values = (values - lo) / rng_

    abs_sum = {f: 0.0 for f in feats}
    records = []
    for i, e in enumerate(explanations):
        grouped = e.phi_by_feature
        for fi, f in enumerate(feats):
            abs_sum[f] += abs(grouped[f])
            records.append((f, e.instance_id, grouped[f],
                            float(values[i, fi]) if values is not None else None))
    mean_abs = {f: abs_sum[f] / len(explanations) for f in feats}
    ordered = sorted(feats, key=lambda f: (-mean_abs[f], f))
    return ShapSummary(ordered, mean_abs, records)


def write_explanations_csv(explanations, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "feature", "phi", "feature_value"])
        for e in explanations:
            for f, phi in e.phi_by_feature.items():
                w.writerow([e.instance_id, f, format(phi, ".10g"), ""])


def write_summary_json(summary, path):
    payload = [{"feature": f, "mean_abs_shap": summary.mean_abs[f], "rank": i + 1}
               for i, f in enumerate(summary.features)]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
