"""Confusion-matrix metrics and rank-based AUROC.

The positive class is chemotherapy (label 1) throughout. Ratios with a zero
denominator are reported as NaN, never silently as 0, so downstream summaries
can skip them with a count.
"""

from dataclasses import dataclass

import numpy as np

METRIC_NAMES = ("accuracy", "auroc", "precision", "sensitivity", "specificity", "f1_score")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricVector:
    accuracy: float
    auroc: float
    precision: float
    sensitivity: float
    specificity: float
    f1_score: float

    def as_dict(self):
        return {name: getattr(self, name) for name in METRIC_NAMES}


def confusion(labels, predicted):
    """Count tp/fp/tn/fn; inputs are 0/1 vectors with 1 = chemotherapy."""
    labels = np.asarray(labels)
    predicted = np.asarray(predicted)
    if labels.shape != predicted.shape:
        raise ValueError("labels and predictions differ in length")
    if labels.size == 0:
        raise ValueError("empty label vector")
    pos = labels == 1
    pred_pos = predicted == 1
    return ConfusionMatrix(
        tp=int(np.sum(pos & pred_pos)),
        fp=int(np.sum(~pos & pred_pos)),
        tn=int(np.sum(~pos & ~pred_pos)),
        fn=int(np.sum(pos & ~pred_pos)),
    )


def auroc(scores, labels):
    """Probability a random positive outranks a random negative, ties half.

    Midrank implementation, O(n log n); equal to the trapezoidal ROC area.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[labels == 1]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _ratio(num, den):
    return num / den if den > 0 else float("nan")


def compute_metrics(cm, scores, labels, threshold=0.5):
    """Six metrics from a confusion matrix plus scores for AUROC."""
    labels = np.asarray(labels)
    if cm.n != labels.size:
        raise ValueError("confusion matrix inconsistent with labels")
    sens = _ratio(cm.tp, cm.tp + cm.fn)
    spec = _ratio(cm.tn, cm.tn + cm.fp)
    prec = _ratio(cm.tp, cm.tp + cm.fp)
    if np.isnan(prec) or np.isnan(sens) or prec + sens == 0:
        f1 = float("nan")
    else:
        f1 = 2 * prec * sens / (prec + sens)
    return MetricVector(
        accuracy=_ratio(cm.tp + cm.tn, cm.n),
        auroc=auroc(scores, labels),
        precision=prec,
        sensitivity=sens,
        specificity=spec,
        f1_score=f1,
    )


def metrics_from_scores(scores, labels, threshold=0.5):
    """Convenience: threshold scores at 0.5 and compute the full vector."""
    predicted = (np.asarray(scores) >= threshold).astype(np.int64)
    cm = confusion(labels, predicted)
    return compute_metrics(cm, scores, labels, threshold)


def predict_label(probabilities, threshold=0.5):
    """1 (chemotherapy) iff probability >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return (np.asarray(probabilities) >= threshold).astype(np.int64)
