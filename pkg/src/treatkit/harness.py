"""Bootstrap-within-cross-validation evaluation harness.

Folds are drawn once per experiment and held fixed. Each iteration
resamples every training fold with replacement, trains all requested
models, pools test-fold predictions over the five folds, and computes one
metric vector per model. Per-iteration seeds are derived from
(master_seed, iteration), so parallel and serial schedules produce
identical results.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import learners, metrics
from .learners import TREE_FAMILIES

MAX_REDRAWS = 50


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray  # row index -> fold id
    master_seed: int

    def fold_rows(self, i):
        return np.flatnonzero(self.assignment == i)


def make_folds(n, k, seed, stratify_labels=None):
    """Random partition into k near-equal folds, deterministic per seed.

    With ``stratify_labels`` the class proportions are preserved by dealing
    a permuted order round-robin within each class.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError("fewer rows than folds")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0)))
    assignment = np.empty(n, dtype=np.int64)
    if stratify_labels is None:
        perm = rng.permutation(n)
        sizes = np.full(k, n // k)
        sizes[: n % k] += 1
        start = 0
        for i, s in enumerate(sizes):
            assignment[perm[start : start + s]] = i
            start += s
    else:
        labels = np.asarray(stratify_labels)
        offset = 0
        for cls in np.unique(labels):
            rows = np.flatnonzero(labels == cls)
            perm = rng.permutation(rows)
            for pos, r in enumerate(perm):
                assignment[r] = (pos + offset) % k
            offset += perm.size % k
    return FoldAssignment(k, assignment, int(seed))


def bootstrap_resample(indices, rng):
    indices = np.asarray(indices)
    if indices.size == 0:
        raise ValueError("empty index list")
    return indices[rng.integers(0, indices.size, size=indices.size)]


@dataclass
class ExperimentViews:
    """One dataset in both encodings, rows aligned.

    Tree families train on the full one-hot matrix; linear families on the
    drop-first matrix z-scored per resampled training fold.
    """
    X_tree: np.ndarray
    X_linear: np.ndarray
    y: np.ndarray
    row_ids: list
    tree_lineage: list = field(default_factory=list)
    linear_lineage: list = field(default_factory=list)

    @property
    def n(self):
        return self.y.shape[0]


def model_names(specs):
    names = []
    seen = {}
    for s in specs:
        c = seen.get(s.family, 0)
        names.append(s.family if c == 0 else f"{s.family}_{c + 1}")
        seen[s.family] = c + 1
    return names


@dataclass
class IterationResult:
    iteration: int
    metrics_by_model: dict  # model name -> MetricVector
    predicted_rows: dict  # model name -> pooled score vector (length n)
    redraws: int = 0


def _standardize(train, test):
    mu = train.mean(axis=0)
    sd = train.std(axis=0, ddof=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (train - mu) / sd, (test - mu) / sd


def run_iteration(views, folds, specs, iteration, master_seed):
    """One bootstrap iteration: every row predicted exactly once per model."""
    n = views.n
    names = model_names(specs)
    scores = {name: np.full(n, np.nan) for name in names}
    redraws = 0
    for fold_id in range(folds.k):
        test_rows = folds.fold_rows(fold_id)
        train_rows = np.flatnonzero(folds.assignment != fold_id)
        if train_rows.size == 0:
            raise ValueError("empty training set; k too small")
        rng = np.random.default_rng(
            np.random.SeedSequence((int(master_seed), 1, int(iteration), fold_id)))
        for attempt in range(MAX_REDRAWS + 1):
            boot = bootstrap_resample(train_rows, rng)
            if len(np.unique(views.y[boot])) == 2:
                break
            redraws += 1
        else:
            raise RuntimeError("bootstrap sample single-class after max redraws")

        lin_train, lin_test = _standardize(views.X_linear[boot],
                                           views.X_linear[test_rows])
        tree_train = views.X_tree[boot]
        tree_test = views.X_tree[test_rows]
        y_train = views.y[boot]
        for m_idx, (spec, name) in enumerate(zip(specs, names)):
            seed = int(np.random.SeedSequence(
                (int(master_seed), 2, int(iteration), fold_id, m_idx,
                 int(spec.seed))).generate_state(1)[0])
            eff = learners.ClassifierSpec(spec.family, spec.hyperparameters, seed)
            if spec.family in TREE_FAMILIES:
                model = learners.fit(eff, tree_train, y_train)
                scores[name][test_rows] = model.predict_proba(tree_test)
            else:
                model = learners.fit(eff, lin_train, y_train)
                scores[name][test_rows] = model.predict_proba(lin_test)

    mv = {}
    for name in names:
        s = scores[name]
        if np.isnan(s).any():
            raise RuntimeError("coverage violation: unpredicted rows")
        mv[name] = metrics.metrics_from_scores(s, views.y)
    return IterationResult(iteration, mv, scores, redraws)


def _run_range(args):
    views, folds, specs, iterations, master_seed = args
    out = []
    for it in iterations:
        res = run_iteration(views, folds, specs, it, master_seed)
        res.predicted_rows = {}  # drop bulky scores before shipping back
        out.append(res)
    return out


def run_experiment(views, specs, n_iterations=1000, master_seed=0, k=5,
                   stratify=False, jobs=1):
    """Run the full N-iteration loop; results ordered by iteration id."""
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    folds = make_folds(views.n, k, master_seed,
                       stratify_labels=views.y if stratify else None)
    iterations = list(range(1, n_iterations + 1))
    if jobs <= 1:
        results = _run_range((views, folds, specs, iterations, master_seed))
    else:
        chunks = [iterations[i::jobs] for i in range(jobs)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_range,
                             [(views, folds, specs, c, master_seed) for c in chunks])
            results = [r for part in parts for r in part]
        results.sort(key=lambda r: r.iteration)
    return results, folds


@dataclass(frozen=True)
class SummaryRow:
    model: str
    metric: str
    mean: float
    median: float
    sd: float
    lower_bound: float
    upper_bound: float
    pct_lower: float
    pct_upper: float
    n_used: int
    n_skipped: int


def summarize(values, model="", metric=""):
    """Mean/median/sample-sd and mean +- 1.96 sd/sqrt(N) bounds.

    NaN entries (undefined metrics) are excluded with a count. The 2.5/97.5
    percentile interval is carried alongside the SE-based bounds.
    """
    values = np.asarray(values, dtype=np.float64)
    good = values[~np.isnan(values)]
    if good.size < 2:
        raise ValueError("need at least two defined values")
    mean = float(np.mean(good))
    sd = float(np.std(good, ddof=1))
    half = 1.96 * sd / math.sqrt(good.size)
    plo, phi = np.percentile(good, [2.5, 97.5])
    return SummaryRow(model, metric, mean, float(np.median(good)), sd,
                      mean - half, mean + half, float(plo), float(phi),
                      good.size, values.size - good.size)


def summary_bounds(mean, sd, n):
    """The confidence-bound formula on reported (mean, sd, N) triples."""
    half = 1.96 * sd / math.sqrt(n)
    return mean - half, mean + half


def summarize_experiment(results, names=None):
    if not results:
        raise ValueError("no results")
    names = names or list(results[0].metrics_by_model)
    rows = []
    for name in names:
        for metric_name in metrics.METRIC_NAMES:
            vals = [getattr(r.metrics_by_model[name], metric_name) for r in results]
            rows.append(summarize(vals, name, metric_name))
    return rows


def select_best(rows):
    """Model with highest mean accuracy; ties by mean AUROC, then name."""
    acc = {}
    auc = {}
    for r in rows:
        if r.metric == "accuracy":
            acc[r.model] = r.mean
        elif r.metric == "auroc":
            auc[r.model] = r.mean
    if not acc:
        raise ValueError("no accuracy rows")
    return min(acc, key=lambda m: (-acc[m], -auc.get(m, 0.0), m))


def write_iteration_csv(results, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "model", "metric", "value"])
        for r in results:
            for model, mv in r.metrics_by_model.items():
                for name, value in mv.as_dict().items():
                    w.writerow([r.iteration, model, name, format(value, ".17g")])


def read_iteration_csv(path):
    """Rebuild per-iteration MetricVectors from a stored CSV."""
    acc = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            it = int(row["iteration"])
            acc.setdefault(it, {}).setdefault(row["model"], {})[row["metric"]] = \
                float(row["value"])
    results = []
    for it in sorted(acc):
        mv = {m: metrics.MetricVector(**vals) for m, vals in acc[it].items()}
        results.append(IterationResult(it, mv, {}))
    return results


def write_summary(rows, csv_path=None, json_path=None, round_digits=4):
    recs = [
        {"model": r.model, "metric": r.metric,
         "mean": round(r.mean, round_digits), "median": round(r.median, round_digits),
         "sd": round(r.sd, round_digits),
         "lower_bound": round(r.lower_bound, round_digits),
         "upper_bound": round(r.upper_bound, round_digits),
         "pct_lower": round(r.pct_lower, round_digits),
         "pct_upper": round(r.pct_upper, round_digits),
         "n_used": r.n_used, "n_skipped": r.n_skipped}
        for r in rows
    ]
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(recs[0]))
            w.writeheader()
            w.writerows(recs)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(recs, fh, indent=2)
    return recs
