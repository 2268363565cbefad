"""Command-line workflow: synth -> ingest -> describe -> run -> explain -> report."""

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np

from . import dataset, explain, harness, learners, report, stats, synth
from .dataset import DataError
from .schema import clinical_schema

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


class ConfigError(Exception):
    pass


DEFAULT_CONFIG = {
    "input": None,
    "out": "out",
    "k": 5,
    "iterations": 1000,
    "seed": 20240723,
    "models": list(learners.FAMILIES),
    "stratify": False,
    "jobs": 1,
    "shap_target": "best",
    "shap_permutations": 200,
    "shap_instances": None,
}


def load_config(args):
    cfg = dict(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}")
        unknown = set(user) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    for flag, key in (("input", "input"), ("out", "out"), ("seed", "seed"),
                      ("iterations", "iterations"), ("folds", "k"),
                      ("jobs", "jobs")):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[key] = v
    if getattr(args, "models", None):
        cfg["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    if cfg["iterations"] < 1:
        raise ConfigError("iterations must be >= 1")
    if cfg["k"] < 2:
        raise ConfigError("folds must be >= 2")
    if not cfg["models"]:
        raise ConfigError("model list is empty")
    return cfg


def build_specs(cfg):
    specs = []
    for entry in cfg["models"]:
        if isinstance(entry, str):
            entry = {"family": entry}
        try:
            specs.append(learners.ClassifierSpec(
                entry["family"], dict(entry.get("hyperparameters", {})),
                int(entry.get("seed", cfg["seed"]))))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad model entry {entry!r}: {e}")
    return specs


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load_views(cfg, schema):
    if not cfg["input"]:
        raise ConfigError("no input path configured")
    records, parsed, drop = dataset.ingest(cfg["input"], schema)
    tree_ds = dataset.encode(records, schema, "full_one_hot")
    lin_ds = dataset.encode(records, schema, "drop_first", standardize=True)
    views = harness.ExperimentViews(tree_ds.X, lin_ds.X, tree_ds.y,
                                    tree_ds.row_ids, tree_ds.column_lineage,
                                    lin_ds.column_lineage)
    return records, parsed, drop, tree_ds, lin_ds, views


def cmd_synth(args):
    cfg = load_config(args)
    schema = clinical_schema()
    text = synth.generate_table(schema, seed=cfg["seed"],
                                n_dropped_extra=args.dropped_rows)
    out = args.output or "synthetic_clinical.tsv"
    _atomic_write(out, text)
    print(f"wrote {out}")
    return 0


def cmd_ingest(args):
    cfg = load_config(args)
    schema = clinical_schema()
    os.makedirs(cfg["out"], exist_ok=True)
    records, parsed, drop, tree_ds, lin_ds, _ = _load_views(cfg, schema)
    for ds, stem in ((tree_ds, "dataset_tree"), (lin_ds, "dataset_linear")):
        ds.write(os.path.join(cfg["out"], stem + ".tsv"),
                 os.path.join(cfg["out"], stem + ".json"))
    report_payload = {
        "rows_parsed": drop.n_input,
        "rows_without_label": drop.dropped_no_label,
        "rows_dropped_by_feature": drop.dropped_by_feature,
        "complete_cases": drop.n_kept,
        "label_counts": drop.label_counts,
        "unknown_columns": parsed.unknown_columns,
        "missing_feature_columns": parsed.missing_feature_columns,
    }
    _atomic_write(os.path.join(cfg["out"], "ingest_report.json"),
                  json.dumps(report_payload, indent=2))
    print(f"complete cases: {drop.n_kept} ({drop.label_counts})")
    return 0


def cmd_describe(args):
    cfg = load_config(args)
    schema = clinical_schema()
    os.makedirs(cfg["out"], exist_ok=True)
    records, _, _, _, _, _ = _load_views(cfg, schema)

    def label_of(r):
        return dataset.LABEL_NAMES[dataset.derive_treatment_label(r)]

    results = stats.bivariate_report(records, schema, label_of)
    lines = []
    csv_rows = []
    json_rows = []
    for fr in results:
        p_txt = "NA" if fr.p_value is None else f"{fr.p_value:.4g}"
        lines.append(f"{fr.feature}  [{fr.test_name}]  p={p_txt}"
                     f"{'  *' if fr.significant else ''}")
        if fr.kind == "numeric":
            for group, (med, q1, q3) in sorted(fr.descriptor.items()):
                lines.append(f"    {group}: {med:g} ({q1:g}, {q3:g})")
                csv_rows.append([fr.feature, "", group, "", "", med, q1, q3,
                                 fr.test_name, fr.statistic, fr.p_value,
                                 fr.significant])
        else:
            for level, by_group in fr.descriptor.items():
                for group, (count, pct) in sorted(by_group.items()):
                    lines.append(f"    {level} | {group}: {count} ({pct:.1f}%)")
                    csv_rows.append([fr.feature, level, group, count,
                                     round(pct, 4), "", "", "", fr.test_name,
                                     fr.statistic, fr.p_value, fr.significant])
        json_rows.append({
            "feature": fr.feature, "kind": fr.kind, "test": fr.test_name,
            "statistic": fr.statistic, "p_value": fr.p_value,
            "significant": fr.significant,
            "descriptor": {str(k): v for k, v in fr.descriptor.items()},
        })
    _atomic_write(os.path.join(cfg["out"], "bivariate.txt"),
                  "\n".join(lines) + "\n")
    buf = ["feature,level,group,count,percent,median,q1,q3,test,statistic,p,significant"]
    for row in csv_rows:
        buf.append(",".join("" if v is None else str(v) for v in row))
    _atomic_write(os.path.join(cfg["out"], "bivariate.csv"), "\n".join(buf) + "\n")
    _atomic_write(os.path.join(cfg["out"], "bivariate.json"),
                  json.dumps(json_rows, indent=2))
    n_sig = sum(1 for fr in results if fr.significant)
    print(f"{len(results)} features, {n_sig} significant at 0.05")
    return 0


def cmd_run(args):
    cfg = load_config(args)
    schema = clinical_schema()
    os.makedirs(cfg["out"], exist_ok=True)
    specs = build_specs(cfg)
    _, _, _, _, _, views = _load_views(cfg, schema)
    results, folds = harness.run_experiment(
        views, specs, n_iterations=cfg["iterations"], master_seed=cfg["seed"],
        k=cfg["k"], stratify=cfg["stratify"], jobs=cfg["jobs"])
    harness.write_iteration_csv(results,
                                os.path.join(cfg["out"], "iteration_metrics.csv"))
    rows = harness.summarize_experiment(results, harness.model_names(specs))
    harness.write_summary(rows, os.path.join(cfg["out"], "bootstrap_summary.csv"),
                          os.path.join(cfg["out"], "bootstrap_summary.json"))
    meta = {
        "iterations": cfg["iterations"], "k": cfg["k"],
        "master_seed": cfg["seed"], "stratified_folds": bool(cfg["stratify"]),
        "folds_fixed_across_iterations": True,
        "metrics_from_pooled_predictions": True,
        "models": [s.to_json() for s in specs],
        "best_model": harness.select_best(rows),
        "redraw_events": sum(r.redraws for r in results),
    }
    _atomic_write(os.path.join(cfg["out"], "experiment_meta.json"),
                  json.dumps(meta, indent=2))
    print(f"best model: {meta['best_model']}")
    return 0


def cmd_explain(args):
    cfg = load_config(args)
    schema = clinical_schema()
    os.makedirs(cfg["out"], exist_ok=True)
    meta_path = os.path.join(cfg["out"], "experiment_meta.json")
    target = cfg["shap_target"]
    if target == "best":
        if not os.path.exists(meta_path):
            raise ConfigError("shap_target 'best' needs a prior `run` in the "
                              "output directory")
        with open(meta_path, encoding="utf-8") as fh:
            target = json.load(fh)["best_model"]
    if target not in learners.FAMILIES:
        raise ConfigError(f"unknown shap target {target!r}")

    _, _, _, tree_ds, lin_ds, views = _load_views(cfg, schema)
    spec = learners.ClassifierSpec(target, {}, cfg["seed"])
    limit = cfg["shap_instances"]
    if target in learners.TREE_FAMILIES:
        model = learners.fit(spec, views.X_tree, views.y)
        X = views.X_tree
        lineage = views.tree_lineage
        rows = X if limit is None else X[:limit]
        expl = explain.explain_dataset(model, rows, X, lineage, method="tree",
                                       row_ids=tree_ds.row_ids)
    else:
        if cfg["shap_permutations"] < 1:
            raise ConfigError("shap_permutations must be >= 1 for non-tree targets")
        mu = views.X_linear.mean(axis=0)
        sd = views.X_linear.std(axis=0, ddof=0)
        sd[sd == 0] = 1.0
        Xz = (views.X_linear - mu) / sd
        model = learners.fit(spec, Xz, views.y)
        rows = Xz if limit is None else Xz[:limit]
        expl = explain.explain_dataset(model, rows, Xz, views.linear_lineage,
                                       method="sampled",
                                       permutations=cfg["shap_permutations"],
                                       seed=cfg["seed"], row_ids=lin_ds.row_ids)
    summary = explain.shap_summary(expl, (views.X_tree if target in
                                          learners.TREE_FAMILIES else Xz)[:len(expl)])
    _write_shap_csv(expl, summary, os.path.join(cfg["out"], "shap_values.csv"))
    explain.write_summary_json(summary,
                               os.path.join(cfg["out"], "shap_summary.json"))
    with open(os.path.join(cfg["out"], "shap_model.json"), "w",
              encoding="utf-8") as fh:
        json.dump(model.to_json(), fh)
    print("ranking:", ", ".join(summary.features[:5]), "...")
    return 0


def _write_shap_csv(explanations, summary, path):
    values = {(f, rid): v for f, rid, _, v in
              [(r[0], r[1], r[2], r[3]) for r in summary.records]}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "feature", "phi", "feature_value"])
        for e in explanations:
            for f, phi in e.phi_by_feature.items():
                fv = values.get((f, e.instance_id))
                w.writerow([e.instance_id, f, format(phi, ".10g"),
                            "" if fv is None else format(fv, ".6g")])


def cmd_report(args):
    cfg = load_config(args)
    os.makedirs(cfg["out"], exist_ok=True)
    it_path = os.path.join(cfg["out"], "iteration_metrics.csv")
    if not os.path.exists(it_path):
        raise ConfigError(f"missing {it_path}; run the `run` command first")
    results = harness.read_iteration_csv(it_path)
    names = list(results[0].metrics_by_model)
    rows = harness.summarize_experiment(results, names)
    paths = report.write_report_files(rows, results, cfg["out"])
    print("wrote", ", ".join(sorted(os.path.basename(p) for p in paths.values())))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="treatkit",
        description="breast-cancer treatment classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config")
    common.add_argument("--input")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--iterations", type=int)
    common.add_argument("--folds", type=int)
    common.add_argument("--models")
    common.add_argument("--jobs", type=int)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic fixture")
    p.add_argument("--output")
    p.add_argument("--dropped-rows", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    for name, func in (("ingest", cmd_ingest), ("describe", cmd_describe),
                       ("run", cmd_run), ("explain", cmd_explain),
                       ("report", cmd_report)):
        sp = sub.add_parser(name, parents=[common])
        sp.set_defaults(func=func)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
