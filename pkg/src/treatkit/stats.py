"""Bivariate analysis: grouped descriptives and hypothesis tests.

Numeric features are summarized as median (Q1, Q3) with linear-interpolation
quartiles and compared by the Mann-Whitney U test; categorical features as
counts with column percentages compared by the chi-square test without
continuity correction. Significance threshold is 0.05.
"""

import math
from dataclasses import dataclass, field

import numpy as np

ALPHA = 0.05


# ---------------------------------------------------------------------------
# tail probabilities (no scipy dependency; scipy serves as the test oracle)

def _gamma_series(a, x):
    # lower regularized incomplete gamma by power series
    ap = a
    summ = 1.0 / a
    delta = summ
    for _ in range(500):
        ap += 1.0
        delta *= x / ap
        summ += delta
        if abs(delta) < abs(summ) * 1e-16:
            break
    return summ * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_cf(a, x):
    # upper regularized incomplete gamma by continued fraction (Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))

def gammainc_upper(a, x):
    """Regularized upper incomplete gamma Q(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError("invalid arguments")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)

def chi2_sf(x, df):
    """Upper tail of the chi-square distribution."""
    if x <= 0:
        return 1.0
    return gammainc_upper(df / 2.0, x / 2.0)

def norm_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# descriptives

def quartiles(values):
    """(Q1, median, Q3) by linear interpolation between order statistics."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty sample")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(q1), float(med), float(q3)

def describe_numeric(values, groups):
    """Per-group (median, Q1, Q3). ``groups`` holds hashable group keys."""
    values = np.asarray(values, dtype=np.float64)
    groups = np.asarray(groups)
    if values.shape != groups.shape:
        raise ValueError("values and groups differ in length")
    out = {}
    for g in np.unique(groups):
        q1, med, q3 = quartiles(values[groups == g])
        out[g.item() if hasattr(g, "item") else g] = (med, q1, q3)
    return out


# ---------------------------------------------------------------------------
# tests

@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @staticmethod
    def from_observations(rows, cols, row_labels=None, col_labels=None):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        rl = tuple(row_labels) if row_labels is not None else tuple(np.unique(rows).tolist())
        cl = tuple(col_labels) if col_labels is not None else tuple(np.unique(cols).tolist())
        counts = np.zeros((len(rl), len(cl)), dtype=np.int64)
        ri = {v: i for i, v in enumerate(rl)}
        ci = {v: i for i, v in enumerate(cl)}
        for r, c in zip(rows.tolist(), cols.tolist()):
            counts[ri[r], ci[c]] += 1
        return ContingencyTable(counts, rl, cl)


def chi_square_test(table):
    """Pearson chi-square of independence; no continuity correction."""
    counts = np.asarray(table.counts if isinstance(table, ContingencyTable) else table,
                        dtype=np.float64)
    if counts.min() < 0:
        raise ValueError("negative count")
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    n = counts.sum()
    if n <= 0 or (row == 0).any() or (col == 0).any():
        raise ValueError("zero marginal row or column")
    expected = np.outer(row, col) / n
    stat = float(np.sum((counts - expected) ** 2 / expected))
    df = (counts.shape[0] - 1) * (counts.shape[1] - 1)
    if df == 0:
        raise ValueError("degenerate 1x1 table")
    return stat, df, chi2_sf(stat, df)


def _midranks(pooled):
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=np.float64)
    s = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and s[j + 1] == s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks

def _tie_term(pooled):
    _, counts = np.unique(pooled, return_counts=True)
    return float(np.sum(counts.astype(np.float64) ** 3 - counts))


def mann_whitney_u(a, b):
    """Two-sided Mann-Whitney U via normal approximation.

    Returns (U, p) where U counts pairs with a-member below b-member
    (ties half). Variance is tie-corrected; a 0.5 continuity correction is
    applied.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    na, nb = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u = float(np.sum(ranks[:na])) - na * (na + 1) / 2.0
    n = na + nb
    mu = na * nb / 2.0
    tie = _tie_term(pooled)
    var = na * nb / 12.0 * ((n + 1) - tie / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return u, 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return u, min(1.0, 2.0 * norm_sf(z))


def kruskal_wallis(groups):
    """Kruskal-Wallis H with tie correction; p from chi-square, g-1 df."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(g.size == 0 for g in groups):
        raise ValueError("need at least two non-empty groups")
    pooled = np.concatenate(groups)
    n = pooled.size
    ranks = _midranks(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + g.size]
        h += float(np.sum(r)) ** 2 / g.size
        start += g.size
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    correction = 1.0 - _tie_term(pooled) / (n**3 - n)
    if correction <= 0:
        return 0.0, 1.0
    h /= correction
    return h, chi2_sf(h, len(groups) - 1)


# ---------------------------------------------------------------------------
# report

@dataclass
class FeatureResult:
    feature: str
    kind: str
    test_name: str
    statistic: float | None
    p_value: float | None
    testable: bool
    # numeric: group -> (median, q1, q3); categorical: level -> {group: (count, pct)}
    descriptor: dict = field(default_factory=dict)

    @property
    def significant(self):
        return self.testable and self.p_value is not None and self.p_value < ALPHA


def bivariate_report(records, schema, label_of):
    """One FeatureResult per schema feature, grouped by treatment.

    ``records`` are complete-case RawRecords, ``label_of`` maps a record to
    its group name.
    """
    groups = np.asarray([label_of(r) for r in records])
    group_names = sorted(set(groups.tolist()))
    results = []
    for feat in schema:
        raw = [r.values[feat.name] for r in records]
        if feat.kind == "numeric":
            vals = np.asarray([float(v) for v in raw])
            desc = describe_numeric(vals, groups)
            try:
                stat, p = mann_whitney_u(vals[groups == group_names[0]],
                                         vals[groups == group_names[1]]) \
                    if len(group_names) == 2 else kruskal_wallis(
                        [vals[groups == g] for g in group_names])
                results.append(FeatureResult(feat.name, "numeric", "mann_whitney_u"
                                             if len(group_names) == 2 else "kruskal_wallis",
                                             stat, p, True, desc))
            except ValueError:
                results.append(FeatureResult(feat.name, "numeric", "not testable",
                                             None, None, False, desc))
        else:
            observed_levels = [c for c in feat.categories if c in set(raw)]
            desc = {}
            for level in observed_levels:
                desc[level] = {}
                for g in group_names:
                    in_group = groups == g
                    count = sum(1 for v, m in zip(raw, in_group) if m and v == level)
                    desc[level][g] = (count, 100.0 * count / int(in_group.sum()))
            try:
                table = ContingencyTable.from_observations(
                    raw, groups, row_labels=observed_levels, col_labels=group_names)
                stat, df, p = chi_square_test(table)
                results.append(FeatureResult(feat.name, "categorical", "chi_square",
                                             stat, p, True, desc))
            except ValueError:
                results.append(FeatureResult(feat.name, "categorical", "not testable",
                                             None, None, False, desc))
    return results
