"""Synthetic clinical fixture generator.

Emits a raw delimited table with realistic per-treatment category
frequencies and numeric quartiles (467 chemotherapy / 256 hormone-therapy
rows by default), written in raw pre-recode strings so the full
ingest pipeline (imputation, recoding, filtering) is exercised. Some cells
for imputable features are blanked in favor of their imputation value, so
complete-case counts are unaffected.
"""

import math

import numpy as np

# per-group sampling weights: {feature: {category: (chemo, hormone)}}
CATEGORY_WEIGHTS = {
    "ER-Status": {"Negative": (151, 4), "Positive": (316, 252)},
    "PR-Status": {"Negative": (188, 35), "Positive": (279, 221)},
    "Surgery-Type": {"Lumpectomy": (119, 75), "Mastectomy": (230, 115),
                     "No Surgery / Other": (118, 66)},
    "Histology-Type": {"Infiltrating Ductal Carcinoma": (347, 162),
                       "Infiltrating Lobular Carcinoma": (80, 71),
                       "Other Type": (40, 23)},
    "Menopause-Status": {"No Information/Other": (35, 11), "Peri": (20, 6),
                         "Post": (271, 202), "Pre": (141, 37)},
    "Pathologic-Stage": {"Stage I": (55, 61), "Stage II": (269, 153),
                         "Stage III": (131, 35), "Stage IV": (5, 4),
                         "Stage X": (7, 3)},
    "Pathologic-M": {"m0": (393, 204), "m1": (6, 4), "m2": (68, 48)},
    "Pathologic-T": {"t1": (105, 82), "t2": (287, 139), "t3": (67, 27),
                     "t4": (8, 8)},
    "Pathologic-N": {"n0": (186, 147), "n1": (168, 79), "n2": (62, 15),
                     "n3": (51, 15)},
    "PR-Level": {"High Expression": (96, 81), "Low Expression": (74, 38),
                 "Moderate Expression": (37, 27), "No Information": (260, 110)},
    "Anatomic-Subdivision": {
        "Left": (70, 42), "Left Lower Inner Quadrant": (8, 6),
        "Left Lower Outer Quadrant": (21, 9),
        "Left Upper Inner Quadrant": (41, 24),
        "Left Upper Outer Quadrant": (91, 54),
        "Right": (84, 32), "Right Lower Inner Quadrant": (9, 7),
        "Right Lower Outer Quadrant": (18, 16),
        "Right Upper Inner Quadrant": (35, 22),
        "Right Upper Outer Quadrant": (90, 44)},
    "Tumor-Necrosis": {"No Necrosis": (263, 149), "Partial Necrosis": (204, 107)},
    "HER2-Status": {"Equivocal": (84, 68), "Indeterminate": (7, 2),
                    "Negative": (267, 147), "No Information": (37, 16),
                    "Positive": (72, 23)},
}

# numeric targets: (median, q1, q3) per group
NUMERIC_TARGETS = {
    "Age": ((53, 46, 61), (65, 55, 74)),
    "Lymph-Nodes-Examined": ((8, 2, 17), (4, 2, 12)),
    "Tumor-Nuclei-Percent": ((80, 70, 85), (80, 70, 90)),
}

# categories that may legitimately appear as blank raw cells
BLANKABLE = {
    "Menopause-Status": "No Information/Other",
    "Pathologic-Stage": "Stage X",
    "Surgery-Type": "No Surgery / Other",
    "PR-Level": "No Information",
    "HER2-Status": "No Information",
}


def _raw_synonyms(schema_feature, category):
    return [raw for raw, cat in schema_feature.recode_map.items() if cat == category]


def _necrosis_raw(category, rng):
    if category == "No Necrosis":
        return "0"
    if category == "Partial Necrosis":
        return str(int(rng.integers(1, 50)))
    if category == "Significant Necrosis":
        return str(int(rng.integers(50, 100)))
    return "100"


def _numeric_value(feature, group_idx, rng):
    med, q1, q3 = NUMERIC_TARGETS[feature][group_idx]
    if feature == "Lymph-Nodes-Examined":
        mu = math.log(med + 1.0)
        sigma = (math.log(q3 + 1.0) - math.log(q1 + 1.0)) / 1.349
        v = int(round(math.exp(rng.normal(mu, sigma)) - 1.0))
        return str(max(v, 0))
    sd = (q3 - q1) / 1.349
    v = int(round(rng.normal(med, sd)))
    if feature == "Tumor-Nuclei-Percent":
        v = min(max(v, 5), 100)
    else:
        v = min(max(v, 26), 90)
    return str(v)


# the dominant predictors; ``signal_features_only`` mode restricts the
# treatment association to these, drawing everything else from pooled marginals
SIGNAL_FEATURES = ("Age", "ER-Status", "HER2-Status")


def generate_table(schema, seed=0, n_chemo=467, n_hormone=256, blank_rate=0.4,
                   n_dropped_extra=0, signal_features_only=False):
    """Return the synthetic clinical table as tab-delimited text."""
    rng = np.random.default_rng(seed)
    by_name = {f.name: f for f in schema}
    header = ["patient_id", "treatment"] + [f.name for f in schema]
    lines = ["\t".join(header)]
    treatments = ["Chemotherapy"] * n_chemo + ["Hormone Therapy"] * n_hormone
    p_chemo = n_chemo / (n_chemo + n_hormone)
    for i, treatment in enumerate(treatments):
        row_group = 0 if treatment == "Chemotherapy" else 1
        row = [f"SYN-{i:04d}", treatment]
        for f in schema:
            if signal_features_only and f.name not in SIGNAL_FEATURES:
                # pooled marginal: pick a virtual group per cell, which keeps
                # the overall frequencies but removes the association
                group_idx = 0 if rng.random() < p_chemo else 1
            else:
                group_idx = row_group
            if f.kind == "numeric":
                if f.name == "Lymph-Nodes-Examined":
                    v = _numeric_value(f.name, group_idx, rng)
                    # a blank lymph-node cell imputes to zero
                    if v == "0" and rng.random() < blank_rate:
                        v = ""
                    row.append(v)
                else:
                    row.append(_numeric_value(f.name, group_idx, rng))
                continue
            cats = list(CATEGORY_WEIGHTS[f.name])
            weights = np.asarray([CATEGORY_WEIGHTS[f.name][c][group_idx]
                                  for c in cats], dtype=np.float64)
            cat = cats[int(rng.choice(len(cats), p=weights / weights.sum()))]
            if f.name in BLANKABLE and cat == BLANKABLE[f.name] \
                    and rng.random() < blank_rate:
                row.append("")
                continue
            if f.name == "Tumor-Necrosis":
                row.append(_necrosis_raw(cat, rng))
                continue
            synonyms = _raw_synonyms(by_name[f.name], cat)
            row.append(synonyms[int(rng.integers(0, len(synonyms)))])
        lines.append("\t".join(row))
    for i in range(n_dropped_extra):
        # rows the pipeline must drop: unlabeled treatment or missing ER
        row = [f"DROP-{i:04d}", "Radiation" if i % 2 else ""]
        for f in schema:
            row.append("" if f.name == "ER-Status" else
                       ("55" if f.kind == "numeric" else ""))
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
