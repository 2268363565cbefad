"""Feature schema for the 16 clinical predictors.

Each feature declares its kind, category set, raw-string recode map, and
(where defined) an imputation value inserted for absent cells. Raw strings
are normalized to lowercase/stripped before lookup, and every canonical
category label maps to itself so recoding is idempotent.
"""

from dataclasses import dataclass, field


def normalize(raw):
    return " ".join(str(raw).strip().lower().split())


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str  # "numeric" | "categorical"
    categories: tuple = ()
    recode_map: dict = field(default_factory=dict)
    # numeric-valued raw strings binned into categories: list of (lo, hi, label)
    bins: tuple = ()
    impute_value: str | None = None

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"bad kind {self.kind!r}")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"duplicate categories in {self.name}")
        full = {normalize(k): v for k, v in self.recode_map.items()}
        for cat in self.categories:
            full.setdefault(normalize(cat), cat)
        object.__setattr__(self, "recode_map", full)

    def recode(self, raw):
        """Canonical category for a raw string, or None if unmapped."""
        if self.kind == "numeric":
            return raw
        if self.bins:
            try:
                x = float(normalize(raw))
            except ValueError:
                pass
            else:
                for lo, hi, label in self.bins:
                    if lo <= x <= hi:
                        return label
                return None
        return self.recode_map.get(normalize(raw))


def _cat(name, mapping, impute=None, bins=(), order=None):
    categories = order if order is not None else list(dict.fromkeys(mapping.values()))
    if bins:
        for _, _, label in bins:
            if label not in categories:
                categories.append(label)
    return FeatureSchema(name, "categorical", tuple(categories), dict(mapping),
                         tuple(bins), impute)


def clinical_schema():
    """The 16 features of the clinical table, in report order."""
    return [
        FeatureSchema("Age", "numeric"),
        _cat("ER-Status", {"negative": "Negative", "positive": "Positive"}),
        _cat("PR-Status", {"negative": "Negative", "positive": "Positive"}),
        _cat("Surgery-Type", {
            "lumpectomy": "Lumpectomy",
            "modified radical mastectomy": "Mastectomy",
            "simple mastectomy": "Mastectomy",
            "no surgery": "No Surgery / Other",
            "other": "No Surgery / Other",
        }, impute="no surgery"),
        _cat("Histology-Type", {
            "infiltrating ductal carcinoma": "Infiltrating Ductal Carcinoma",
            "infiltrating lobular carcinoma": "Infiltrating Lobular Carcinoma",
            "infiltrating carcinoma nos": "Other Type",
            "medullary carcinoma": "Other Type",
            "metaplastic carcinoma": "Other Type",
            "mixed histology (please specify)": "Other Type",
            "mucinous carcinoma": "Other Type",
            "other, specify": "Other Type",
        }),
        FeatureSchema("Lymph-Nodes-Examined", "numeric", impute_value="0"),
        _cat("Menopause-Status", {
            "pre (<6 months since lmp and no prior bilateral ovariectomy and not on estrogen replacement)": "Pre",
            "post (prior bilateral ovariectomy or >12 mo since lmp with no prior hysterectomy)": "Post",
            "peri (6-12 months since last menstrual period)": "Peri",
            "status unknown": "No Information/Other",
            "indeterminate (neither pre or postmenopausal)": "No Information/Other",
        }, impute="status unknown"),
        _cat("Pathologic-Stage", {
            "stage i": "Stage I", "stage ia": "Stage I", "stage ib": "Stage I",
            "stage ii": "Stage II", "stage iia": "Stage II", "stage iib": "Stage II",
            "stage iii": "Stage III", "stage iiia": "Stage III",
            "stage iiib": "Stage III", "stage iiic": "Stage III",
            "stage iv": "Stage IV",
            "stage x": "Stage X",
        }, impute="stage x"),
        _cat("Pathologic-M", {
            "cm0 (i+)": "m0", "m0": "m0",
            "m1": "m1",
            "mx": "m2", "m2": "m2",
        }),
        _cat("Pathologic-T", {
            "t1": "t1", "t1b": "t1", "t1c": "t1",
            "t2": "t2", "t2a": "t2",
            "t3": "t3", "t3a": "t3",
            "t4": "t4", "t4b": "t4", "t4d": "t4", "tx": "t4",
        }),
        _cat("Pathologic-N", {
            "n0": "n0", "n0 (i-)": "n0", "n0 (i+)": "n0", "n0 (mol+)": "n0",
            "n1": "n1", "n1a": "n1", "n1b": "n1", "n1c": "n1", "n1mi": "n1",
            "n2": "n2", "n2a": "n2",
            "n3": "n3", "n3a": "n3", "n3b": "n3", "n3c": "n3", "nx": "n3",
        }),
        _cat("PR-Level", {
            "<10%": "Low Expression",
            "10-19%": "Moderate Expression", "20-29%": "Moderate Expression",
            "30-39%": "Moderate Expression", "40-49%": "Moderate Expression",
            "50-59%": "High Expression", "60-69%": "High Expression",
            "70-79%": "High Expression", "80-89%": "High Expression",
            "90-99%": "High Expression",
            "no information": "No Information",
        }, impute="no information",
           order=["High Expression", "Low Expression", "Moderate Expression",
                  "No Information"]),
        _cat("Anatomic-Subdivision", {
            "left": "Left",
            "left lower inner quadrant": "Left Lower Inner Quadrant",
            "left lower outer quadrant": "Left Lower Outer Quadrant",
            "left upper inner quadrant": "Left Upper Inner Quadrant",
            "left upper outer quadrant": "Left Upper Outer Quadrant",
            "right": "Right",
            "right lower inner quadrant": "Right Lower Inner Quadrant",
            "right lower outer quadrant": "Right Lower Outer Quadrant",
            "right upper inner quadrant": "Right Upper Inner Quadrant",
            "right upper outer quadrant": "Right Upper Outer Quadrant",
        }),
        _cat("Tumor-Necrosis", {},
             bins=((0, 0, "No Necrosis"), (1, 49, "Partial Necrosis"),
                   (50, 99, "Significant Necrosis"), (100, 100, "Complete Necrosis")),
             order=["No Necrosis", "Partial Necrosis", "Significant Necrosis",
                    "Complete Necrosis"]),
        FeatureSchema("Tumor-Nuclei-Percent", "numeric"),
        _cat("HER2-Status", {
            "equivocal": "Equivocal",
            "indeterminate": "Indeterminate",
            "negative": "Negative",
            "no information": "No Information",
            "positive": "Positive",
        }, impute="no information"),
    ]


FEATURE_NAMES = tuple(f.name for f in clinical_schema())
