"""Clinical table ingestion: parse, label, impute, recode, filter, encode."""

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .schema import normalize

CHEMOTHERAPY = 1
HORMONE_THERAPY = 0
LABEL_NAMES = {CHEMOTHERAPY: "Chemotherapy", HORMONE_THERAPY: "HormoneTherapy"}

MISSING_TOKENS = {
    "", "na", "n/a", "nan", "null", "none",
    "[not available]", "[unknown]", "[not evaluated]", "[discrepancy]",
    "[completed]", "[not applicable]",
}


class DataError(Exception):
    """Malformed input table or schema violation."""


@dataclass(frozen=True)
class RawRecord:
    patient_id: str
    values: dict  # feature name -> str | None
    treatment: str | None = None


@dataclass
class ParseResult:
    records: list
    unknown_columns: list
    missing_feature_columns: list


def _is_missing(cell):
    return cell is None or normalize(cell) in MISSING_TOKENS


def _sniff_delimiter(header_line):
    return "\t" if header_line.count("\t") >= header_line.count(",") else ","


def parse_clinical_table(source, schema, id_column="patient_id",
                         treatment_column="treatment"):
    """Read a delimited clinical table into RawRecords.

    ``source`` is a path, a text stream, or bytes. Unknown columns are
    ignored (reported in the result); absent/unparseable cells become None.
    """
    if isinstance(source, (bytes, bytearray)):
        stream = io.StringIO(source.decode("utf-8"))
    elif hasattr(source, "read"):
        stream = source
    else:
        stream = open(source, "r", encoding="utf-8")
    try:
        first = stream.readline()
        if not first.strip():
            raise DataError("missing header row")
        delim = _sniff_delimiter(first)
        reader = csv.reader(io.StringIO(first.rstrip("\n")), delimiter=delim)
        header = next(reader)
        by_name = {f.name: f for f in schema}
        norm_header = [h.strip() for h in header]
        if id_column not in norm_header:
            raise DataError(f"header lacks id column {id_column!r}")
        known = set(by_name) | {id_column, treatment_column}
        unknown = [h for h in norm_header if h not in known]
        missing_cols = [n for n in by_name if n not in norm_header]

        records = []
        seen_ids = set()
        for lineno, row in enumerate(csv.reader(stream, delimiter=delim), start=2):
            if not row or all(not c.strip() for c in row):
                continue
            cells = dict(zip(norm_header, row))
            pid = cells.get(id_column, "").strip()
            if not pid:
                raise DataError(f"row {lineno}: empty {id_column}")
            if pid in seen_ids:
                raise DataError(f"duplicate patient_id {pid!r} at row {lineno}")
            seen_ids.add(pid)
            values = {}
            for name in by_name:
                cell = cells.get(name)
                values[name] = None if _is_missing(cell) else cell.strip()
            treat = cells.get(treatment_column)
            treat = None if _is_missing(treat) else treat.strip()
            records.append(RawRecord(pid, values, treat))
        if not records:
            raise DataError("no data rows")
        return ParseResult(records, unknown, missing_cols)
    finally:
        if not hasattr(source, "read") and not isinstance(source, (bytes, bytearray)):
            stream.close()


def derive_treatment_label(record):
    """1 for chemotherapy, 0 for hormone therapy, None otherwise."""
    if record.treatment is None:
        return None
    t = normalize(record.treatment)
    if "chemo" in t:
        return CHEMOTHERAPY
    if "hormone" in t:
        return HORMONE_THERAPY
    return None


def impute_missing(records, schema):
    """Fill absent values for the features that declare an imputation rule."""
    rules = {f.name: f.impute_value for f in schema if f.impute_value is not None}
    out = []
    for r in records:
        values = dict(r.values)
        for name, fill in rules.items():
            if values.get(name) is None:
                values[name] = fill
        out.append(replace(r, values=values))
    return out


def recode_features(records, schema):
    """Map raw strings to canonical category labels per the recode tables."""
    out = []
    for i, r in enumerate(records):
        values = dict(r.values)
        for f in schema:
            raw = values.get(f.name)
            if raw is None:
                continue
            if f.kind == "numeric":
                try:
                    float(raw)
                except ValueError:
                    raise DataError(
                        f"feature {f.name!r}: non-numeric value {raw!r} "
                        f"(record {r.patient_id})")
                continue
            recoded = f.recode(raw)
            if recoded is None:
                raise DataError(
                    f"feature {f.name!r}: unmapped value {raw!r} "
                    f"(record {r.patient_id})")
            values[f.name] = recoded
        out.append(replace(r, values=values))
    return out


@dataclass
class DropReport:
    n_input: int
    n_kept: int
    dropped_no_label: int
    dropped_by_feature: dict
    label_counts: dict


def filter_complete_cases(records, schema):
    """Keep labeled records with no absent feature values; report drops."""
    kept = []
    no_label = 0
    by_feature = {f.name: 0 for f in schema}
    label_counts = {name: 0 for name in LABEL_NAMES.values()}
    for r in records:
        label = derive_treatment_label(r)
        if label is None:
            no_label += 1
            continue
        missing = [f.name for f in schema if r.values.get(f.name) is None]
        if missing:
            for name in missing:
                by_feature[name] += 1
            continue
        label_counts[LABEL_NAMES[label]] += 1
        kept.append(r)
    if not kept:
        raise DataError("no complete cases remain")
    return kept, DropReport(len(records), len(kept), no_label, by_feature, label_counts)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    column_lineage: list  # (source feature, category label or "numeric")
    row_ids: list
    policy: str
    standardize: bool
    warnings: list = field(default_factory=list)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def column_names(self):
        return [feat if cat == "numeric" else f"{feat}={cat}"
                for feat, cat in self.column_lineage]

    def feature_groups(self):
        """Source feature -> list of column indices, in lineage order."""
        groups = {}
        for j, (feat, _) in enumerate(self.column_lineage):
            groups.setdefault(feat, []).append(j)
        return groups

    def write(self, table_path, sidecar_path, extra=None):
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(["patient_id", "treatment"] + self.column_names()) + "\n")
            for i, rid in enumerate(self.row_ids):
                row = [rid, LABEL_NAMES[int(self.y[i])]]
                row += [format(v, ".10g") for v in self.X[i]]
                fh.write("\t".join(row) + "\n")
        meta = {
            "n_rows": self.n,
            "n_columns": self.p,
            "policy": self.policy,
            "standardize": self.standardize,
            "column_lineage": [list(t) for t in self.column_lineage],
            "warnings": self.warnings,
        }
        if extra:
            meta.update(extra)
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)


def encode(records, schema, policy="full_one_hot", standardize=False):
    """Expand complete-case records into a numeric design matrix.

    ``policy`` is "full_one_hot" or "drop_first". Standardization parameters
    are intentionally not fitted here; folds own them.
    """
    if policy not in ("full_one_hot", "drop_first"):
        raise ValueError(f"unknown policy {policy!r}")
    labels = []
    for r in records:
        lab = derive_treatment_label(r)
        if lab is None:
            raise DataError(f"record {r.patient_id} has no treatment label")
        labels.append(lab)

    columns = []
    lineage = []
    warnings = []
    for f in schema:
        if f.kind == "numeric":
            col = np.asarray([float(r.values[f.name]) for r in records])
            columns.append(col)
            lineage.append((f.name, "numeric"))
            continue
        raw = [r.values[f.name] for r in records]
        observed = [c for c in f.categories if c in set(raw)]
        use = observed[1:] if policy == "drop_first" else observed
        if not use:
            warnings.append(f"feature {f.name!r}: single observed level, dropped")
            continue
        for cat in use:
            columns.append(np.asarray([1.0 if v == cat else 0.0 for v in raw]))
            lineage.append((f.name, cat))

    X = np.column_stack(columns) if columns else np.zeros((len(records), 0))
    return Dataset(X, np.asarray(labels, dtype=np.int64), lineage,
                   [r.patient_id for r in records], policy, standardize, warnings)


def ingest(source, schema, id_column="patient_id", treatment_column="treatment"):
    """Full pipeline: parse -> impute -> recode -> filter. Returns
    (records, ParseResult, DropReport)."""
    parsed = parse_clinical_table(source, schema, id_column, treatment_column)
    records = impute_missing(parsed.records, schema)
    records = recode_features(records, schema)
    kept, report = filter_complete_cases(records, schema)
    return kept, parsed, report
