import numpy as np
import pytest

from treatkit import dataset, harness, synth
from treatkit.schema import clinical_schema


@pytest.fixture(scope="session")
def schema():
    return clinical_schema()


@pytest.fixture(scope="session")
def synth_path(tmp_path_factory, schema):
    text = synth.generate_table(schema, seed=11, n_dropped_extra=4)
    path = tmp_path_factory.mktemp("fixture") / "synthetic_clinical.tsv"
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def ingested(synth_path, schema):
    return dataset.ingest(synth_path, schema)


@pytest.fixture(scope="session")
def views(ingested, schema):
    records, _, _ = ingested
    tree_ds = dataset.encode(records, schema, "full_one_hot")
    lin_ds = dataset.encode(records, schema, "drop_first", standardize=True)
    return harness.ExperimentViews(tree_ds.X, lin_ds.X, tree_ds.y,
                                   tree_ds.row_ids, tree_ds.column_lineage,
                                   lin_ds.column_lineage)


def make_separable(n=200, p=6, seed=0, margin=1.0):
    """Linearly separable binary data with a clear margin."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int64)
    X[:, 0] += margin * (2 * y - 1)
    return X, y


def make_noisy(n=200, p=5, seed=0):
    """Overlapping-class binary data."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    logits = X[:, 0] - 0.6 * X[:, 1] + 0.3 * X[:, 2]
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(np.int64)
    if len(np.unique(y)) < 2:  # pragma: no cover
        y[0] = 1 - y[0]
    return X, y
