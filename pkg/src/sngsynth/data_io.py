"""CSV ingestion and export plus deterministic test fixtures.

The loader is schema-driven: a :class:`CsvSchema` names the label column
(by header name or position), optionally restricts the feature columns, and
sets header/delimiter handling. Labels become dense integer indices in order
of first appearance; the original strings are kept as class names.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core_model import DataError, Dataset, SyntheticBatch


@dataclass(frozen=True)
class CsvSchema:
    """How to read a delimited file: label column (name or 0-based index,
    default: last column), optional explicit feature columns, header flag,
    and delimiter."""

    label_column: str | int = -1
    feature_columns: list | None = None
    has_header: bool = True
    delimiter: str = ","

    @classmethod
    def from_json_file(cls, path) -> "CsvSchema":
        path = Path(path)
        if not path.exists():
            raise DataError(f"schema config not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"schema config {path} is not valid JSON: {exc}") from exc
        known = {"label_column", "feature_columns", "has_header", "delimiter"}
        unknown = set(doc) - known
        if unknown:
            raise DataError(f"schema config has unknown keys: {sorted(unknown)}")
        return cls(**doc)


def _resolve_column(ref, header: list[str] | None, width: int, what: str) -> int:
    if isinstance(ref, bool):
        raise DataError(f"{what} must be a column name or index, got {ref!r}")
    if isinstance(ref, int):
        idx = ref if ref >= 0 else width + ref
        if not 0 <= idx < width:
            raise DataError(f"{what} index {ref} out of range for {width} columns")
        return idx
    if header is None:
        raise DataError(f"{what} {ref!r} given by name but the file has no header")
    if ref not in header:
        raise DataError(f"{what} {ref!r} not found in header {header}")
    return header.index(ref)


def load_csv(path, schema: CsvSchema | None = None, max_bad_rows: int = 0) -> Dataset:
    """Parse a delimited file into a Dataset.

    Rows with non-numeric feature cells are rejected with row-numbered
    findings; more than ``max_bad_rows`` such rows fail the whole load.
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")

    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path} contains no rows")

    header = [c.strip() for c in rows[0]] if schema.has_header else None
    data_rows = rows[1:] if schema.has_header else rows
    if not data_rows:
        raise DataError(f"{path} contains a header but no data rows")
    width = len(rows[0])

    label_idx = _resolve_column(schema.label_column, header, width, "label column")
    if schema.feature_columns is not None:
        feature_idx = [_resolve_column(c, header, width, "feature column")
                       for c in schema.feature_columns]
    else:
        feature_idx = [j for j in range(width) if j != label_idx]
    if not feature_idx:
        raise DataError("schema selects zero feature columns")
    if label_idx in feature_idx:
        raise DataError("label column cannot also be a feature column")

    feature_names = ([header[j] for j in feature_idx] if header
                     else [f"f{j}" for j in feature_idx])

    findings: list[str] = []
    features: list[list[float]] = []
    raw_labels: list[str] = []
    for r, row in enumerate(data_rows, start=1):
        if len(row) != width:
            findings.append(f"row {r}: expected {width} columns, found {len(row)}")
            continue
        vals = []
        bad = None
        for j, name in zip(feature_idx, feature_names):
            try:
                vals.append(float(row[j]))
            except ValueError:
                bad = f"row {r}, column {name!r}: non-numeric value {row[j]!r}"
                break
        if bad:
            findings.append(bad)
            continue
        features.append(vals)
        raw_labels.append(row[label_idx].strip())

    if len(findings) > max_bad_rows:
        raise DataError(
            f"{path}: {len(findings)} unparseable row(s) exceed tolerance "
            f"{max_bad_rows}: " + "; ".join(findings[:5]))
    for f in findings:
        warnings.warn(f"{path}: skipped {f}")
    if not features:
        raise DataError(f"{path}: no parseable data rows")

    class_names: list[str] = []
    class_index: dict[str, int] = {}
    labels = []
    for lab in raw_labels:
        if lab not in class_index:
            class_index[lab] = len(class_names)
            class_names.append(lab)
        labels.append(class_index[lab])

    return Dataset.from_arrays(np.asarray(features, dtype=np.float64),
                               np.asarray(labels, dtype=np.int64),
                               class_names, feature_names)


# ---------------------------------------------------------------------------
# Fixture generators
# ---------------------------------------------------------------------------

def make_blobs(n_per_class: int, num_classes: int, dim: int,
               centroid_separation: float, cluster_std: float,
               seed: int = 0) -> Dataset:
    """Gaussian clusters at deterministic axis-aligned centroids.

    Centroid k sits at ``(k // dim + 1) * centroid_separation`` along axis
    ``k % dim``, so every pair of centroids is at least
    ``centroid_separation`` apart.
    """
    if min(n_per_class, num_classes, dim) < 1:
        raise ValueError("n_per_class, num_classes, and dim must be positive")
    if centroid_separation <= 0 or cluster_std <= 0:
        raise ValueError("centroid_separation and cluster_std must be positive")
    rng = np.random.default_rng(seed)
    feats = []
    labels = []
    for k in range(num_classes):
        centroid = np.zeros(dim)
        centroid[k % dim] = (k // dim + 1) * centroid_separation
        feats.append(centroid + rng.normal(0.0, cluster_std, size=(n_per_class, dim)))
        labels.append(np.full(n_per_class, k, dtype=np.int64))
    features = np.concatenate(feats)
    return Dataset.from_arrays(features, np.concatenate(labels),
                               [str(k) for k in range(num_classes)])


def make_ring(n_points: int, radius: float = 1.0, jitter: float = 0.05,
              seed: int = 0) -> np.ndarray:
    """2-D points at uniform random angles on a circle, with Gaussian radial
    jitter; jitter=0 puts every point exactly at the given radius."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if radius <= 0 or jitter < 0:
        raise ValueError("radius must be positive and jitter non-negative")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_points)
    r = radius + (rng.normal(0.0, jitter, size=n_points) if jitter > 0 else 0.0)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


# ---------------------------------------------------------------------------
# Writers (all floats via repr for stable, byte-identical round trips)
# ---------------------------------------------------------------------------

def _open_writer(path):
    fh = Path(path).open("w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_dataset_csv(dataset: Dataset, path, label_header: str = "label") -> None:
    """Features plus a trailing label column, with header."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(list(dataset.feature_names) + [label_header])
        for i in range(dataset.n_samples):
            w.writerow([repr(float(v)) for v in dataset.features[i]]
                       + [dataset.class_names[dataset.labels[i]]])


def write_synthetic_csv(batch: SyntheticBatch, path,
                        provenance_path=None, label_header: str = "label") -> None:
    """Synthetic samples as CSV (original feature header + trailing label),
    with an optional provenance sidecar (row, class, neuron_index)."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(list(batch.feature_names) + [label_header])
        for i in range(batch.n_samples):
            w.writerow([repr(float(v)) for v in batch.features[i]]
                       + [batch.class_names[batch.labels[i]]])
    if provenance_path is not None:
        fh, w = _open_writer(provenance_path)
        with fh:
            w.writerow(["row", "class", "neuron_index"])
            for i in range(batch.n_samples):
                w.writerow([i, batch.class_names[batch.provenance[i, 0]],
                            int(batch.provenance[i, 1])])


def write_loss_csv(loss_history, path) -> None:
    """Two-column (epoch, loss) export of a training-loss trace."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(loss_history):
            w.writerow([epoch, repr(float(loss))])


def write_points_csv(points: np.ndarray, path, names: list[str] | None = None) -> None:
    """Plain coordinate dump used for topology-demo checkpoints."""
    points = np.asarray(points, dtype=np.float64)
    names = names or [f"x{j}" for j in range(points.shape[1])]
    fh, w = _open_writer(path)
    with fh:
        w.writerow(names)
        for row in points:
            w.writerow([repr(float(v)) for v in row])


def write_report_csv(report, path) -> None:
    """Per-regime metric table as delimited output next to the JSON report."""
    fh, w = _open_writer(path)
    with fh:
        w.writerow(["regime", "mean_accuracy", "std_accuracy", "macro_precision",
                    "macro_recall", "macro_f1", "train_time_ms", "fidelity_mse",
                    "train_size"])
        for name, r in report.regimes.items():
            w.writerow([name, repr(r.mean_accuracy), repr(r.std_accuracy),
                        repr(r.macro_precision), repr(r.macro_recall),
                        repr(r.macro_f1), repr(r.train_time_ms),
                        "" if r.fidelity_mse is None else repr(r.fidelity_mse),
                        r.train_size])
