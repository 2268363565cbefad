"""Summary-table and figure-data emission: Tukey box statistics, Gaussian
kernel densities, fixed-format metric tables, and deterministic SVG."""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .metrics import METRIC_NAMES
from .stats import quartiles

METRIC_DISPLAY = {
    "accuracy": "Accuracy", "auroc": "Auroc", "precision": "Precision",
    "sensitivity": "Sensitivity", "specificity": "Specificity",
    "f1_score": "F1 Score",
}


@dataclass(frozen=True)
class BoxplotStats:
    low_whisker: float
    q1: float
    median: float
    q3: float
    high_whisker: float
    outliers: tuple


def boxplot_stats(samples):
    """Tukey convention: whiskers at the outermost points within 1.5 IQR."""
    v = np.asarray(samples, dtype=np.float64)
    if v.size < 5:
        raise ValueError("need at least 5 samples")
    q1, med, q3 = quartiles(v)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    low = float(inside.min())
    high = float(inside.max())
    outliers = tuple(sorted(float(x) for x in v[(v < lo_fence) | (v > hi_fence)]))
    return BoxplotStats(low, q1, med, q3, high, outliers)


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def kde(samples, bandwidth=None, grid_size=512):
    """Gaussian KDE; Silverman bandwidth by default; grid spans data +- 3h."""
    v = np.asarray(samples, dtype=np.float64)
    if bandwidth is not None and bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    if bandwidth is None:
        if np.unique(v).size < 2:
            raise ValueError("need 2 distinct samples for automatic bandwidth")
        sd = float(np.std(v, ddof=1))
        q1, _, q3 = quartiles(v)
        spread = min(sd, (q3 - q1) / 1.349) or sd
        bandwidth = 0.9 * spread * v.size ** (-0.2)
    grid = np.linspace(v.min() - 3 * bandwidth, v.max() + 3 * bandwidth, grid_size)
    z = (grid[:, None] - v[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (v.size * bandwidth * math.sqrt(2 * math.pi))
    return DensityCurve(grid, density, float(bandwidth))


def emit_metric_table(rows, fmt="text"):
    """Model-grouped metric table in the conventional column order.

    ``rows`` are harness SummaryRows. ``fmt`` is "text" or "csv".
    """
    by_model = {}
    for r in rows:
        by_model.setdefault(r.model, {})[r.metric] = r
    header = ["Method", "Metric", "Mean", "Median", "SD", "Lower Bound", "Upper Bound"]
    out_rows = []
    for model in by_model:
        for metric in METRIC_NAMES:
            r = by_model[model].get(metric)
            if r is None:
                continue
            cells = [model, METRIC_DISPLAY[metric]]
            for val in (r.mean, r.median, r.sd, r.lower_bound, r.upper_bound):
                cells.append("—" if val is None or math.isnan(val)
                             else f"{val:.4f}")
            out_rows.append(cells)
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(c for c in row) for row in out_rows]
        return "\n".join(lines) + "\n"
    widths = [max(len(h), max((len(r[i]) for r in out_rows), default=0))
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for row in out_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def parse_metric_table_csv(text):
    rows = list(csv.DictReader(text.splitlines()))
    inv = {v: k for k, v in METRIC_DISPLAY.items()}
    out = []
    for r in rows:
        out.append({"model": r["Method"], "metric": inv[r["Metric"]],
                    **{k: float(r[h]) for k, h in
                       (("mean", "Mean"), ("median", "Median"), ("sd", "SD"),
                        ("lower_bound", "Lower Bound"),
                        ("upper_bound", "Upper Bound"))}})
    return out


# ---------------------------------------------------------------------------
# SVG rendering (no plotting dependency: byte-identical output per input)

_PANEL_W, _PANEL_H, _MARGIN = 160, 120, 18


def _fmt(x):
    return format(round(x, 3), ".3f")


def _panel_transform(x0, x1, y0, y1):
    def tx(v):
        if x1 == x0:
            return _PANEL_W / 2
        return _MARGIN + (v - x0) / (x1 - x0) * (_PANEL_W - 2 * _MARGIN)

    def ty(v):
        if y1 == y0:
            return _PANEL_H / 2
        return _PANEL_H - _MARGIN - (v - y0) / (y1 - y0) * (_PANEL_H - 2 * _MARGIN)

    return tx, ty


def boxplot_grid_svg(stats_grid, row_labels, col_labels):
    """One panel per (model, metric); stats_grid[model][metric] = BoxplotStats."""
    n_rows = len(row_labels)
    n_cols = len(col_labels)
    width = n_cols * _PANEL_W
    height = n_rows * _PANEL_H + 14
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" font-family="monospace" font-size="9">']
    for ci, col in enumerate(col_labels):
        parts.append(f'<text x="{ci * _PANEL_W + _PANEL_W // 2}" y="10" '
                     f'text-anchor="middle">{col}</text>')
    for ri, row in enumerate(row_labels):
        for ci, col in enumerate(col_labels):
            s = stats_grid[row][col]
            ox, oy = ci * _PANEL_W, ri * _PANEL_H + 14
            vals = [s.low_whisker, s.high_whisker, *s.outliers]
            y0, y1 = min(vals), max(vals)
            _, ty = _panel_transform(0, 1, y0, y1)
            cx = _PANEL_W / 2
            bw = 30.0
            parts.append(f'<g id="box-{row}-{col}" transform="translate({ox},{oy})">')
            parts.append(f'<text x="4" y="{_PANEL_H - 4}">{row}</text>')
            parts.append(
                f'<rect x="{_fmt(cx - bw / 2)}" y="{_fmt(ty(s.q3))}" width="{_fmt(bw)}" '
                f'height="{_fmt(max(ty(s.q1) - ty(s.q3), 0.5))}" fill="none" stroke="black"/>')
            for v in (s.median,):
                parts.append(f'<line x1="{_fmt(cx - bw / 2)}" x2="{_fmt(cx + bw / 2)}" '
                             f'y1="{_fmt(ty(v))}" y2="{_fmt(ty(v))}" stroke="black"/>')
            for top, bottom in ((s.q3, s.high_whisker), (s.q1, s.low_whisker)):
                parts.append(f'<line x1="{_fmt(cx)}" x2="{_fmt(cx)}" '
                             f'y1="{_fmt(ty(top))}" y2="{_fmt(ty(bottom))}" stroke="black"/>')
                parts.append(f'<line x1="{_fmt(cx - bw / 4)}" x2="{_fmt(cx + bw / 4)}" '
                             f'y1="{_fmt(ty(bottom))}" y2="{_fmt(ty(bottom))}" stroke="black"/>')
            for v in s.outliers:
                parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(ty(v))}" r="1.5" '
                             f'fill="black"/>')
            parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def density_grid_svg(curve_grid, row_labels, col_labels):
    n_cols = len(col_labels)
    width = n_cols * _PANEL_W
    height = len(row_labels) * _PANEL_H + 14
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" font-family="monospace" font-size="9">']
    for ci, col in enumerate(col_labels):
        parts.append(f'<text x="{ci * _PANEL_W + _PANEL_W // 2}" y="10" '
                     f'text-anchor="middle">{col}</text>')
    for ri, row in enumerate(row_labels):
        for ci, col in enumerate(col_labels):
            c = curve_grid[row][col]
            ox, oy = ci * _PANEL_W, ri * _PANEL_H + 14
            tx, ty = _panel_transform(float(c.grid[0]), float(c.grid[-1]),
                                      0.0, float(c.density.max()) or 1.0)
            step = max(1, c.grid.size // 128)
            pts = " ".join(f"{_fmt(tx(float(g)))},{_fmt(ty(float(d)))}"
                           for g, d in zip(c.grid[::step], c.density[::step]))
            parts.append(f'<g id="density-{row}-{col}" transform="translate({ox},{oy})">')
            parts.append(f'<text x="4" y="{_PANEL_H - 4}">{row}</text>')
            parts.append(f'<polyline points="{pts}" fill="none" stroke="black"/>')
            parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report_files(rows, results, out_dir):
    """Emit summary_table.{txt,csv,json}, figure SVGs, and figure data CSVs."""
    import os

    models = list(dict.fromkeys(r.model for r in rows))
    values = {m: {} for m in models}
    for m in models:
        for metric in METRIC_NAMES:
            vals = np.asarray([getattr(r.metrics_by_model[m], metric)
                               for r in results])
            values[m][metric] = vals[~np.isnan(vals)]

    box_grid = {m: {METRIC_DISPLAY[k]: boxplot_stats(values[m][k])
                    for k in METRIC_NAMES} for m in models}
    den_grid = {}
    for m in models:
        den_grid[m] = {}
        for k in METRIC_NAMES:
            v = values[m][k]
            try:
                den_grid[m][METRIC_DISPLAY[k]] = kde(v)
            except ValueError:
                den_grid[m][METRIC_DISPLAY[k]] = DensityCurve(
                    np.array([v[0] - 1, v[0] + 1]), np.array([0.5, 0.5]), 1.0)

    cols = [METRIC_DISPLAY[k] for k in METRIC_NAMES]
    paths = {}
    def p(name):
        paths[name] = os.path.join(out_dir, name)
        return paths[name]

    with open(p("summary_table.txt"), "w", encoding="utf-8") as fh:
        fh.write(emit_metric_table(rows, "text"))
    with open(p("summary_table.csv"), "w", encoding="utf-8") as fh:
        fh.write(emit_metric_table(rows, "csv"))
    with open(p("summary_table.json"), "w", encoding="utf-8") as fh:
        json.dump([r.__dict__ for r in rows], fh, indent=2, default=float)
    with open(p("boxplots.svg"), "w", encoding="utf-8") as fh:
        fh.write(boxplot_grid_svg(box_grid, models, cols))
    with open(p("densities.svg"), "w", encoding="utf-8") as fh:
        fh.write(density_grid_svg(den_grid, models, cols))
    with open(p("boxplot_data.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "metric", "low_whisker", "q1", "median", "q3",
                    "high_whisker", "n_outliers"])
        for m in models:
            for k in METRIC_NAMES:
                s = box_grid[m][METRIC_DISPLAY[k]]
                w.writerow([m, k, s.low_whisker, s.q1, s.median, s.q3,
                            s.high_whisker, len(s.outliers)])
    with open(p("density_data.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "metric", "grid", "density"])
        for m in models:
            for k in METRIC_NAMES:
                c = den_grid[m][METRIC_DISPLAY[k]]
                for g, d in zip(c.grid, c.density):
                    w.writerow([m, k, format(float(g), ".8g"),
                                format(float(d), ".8g")])
    return paths
