"""Shared domain types: datasets, hyperparameters, trained models, synthetic batches.

All feature math downstream happens in min-max normalized space ([0, 1] per
feature, scaled with the training data's observed ranges), so a single scalar
noise level is comparable across heterogeneous features. ``norm_meta`` always
records the raw-unit (min, max) per feature; normalized arrays keep the meta
around so values can be mapped back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

MODEL_FORMAT_VERSION = "sng-model/1"


class DataError(ValueError):
    """Raised for malformed datasets, schemas, or model files."""


@dataclass(frozen=True)
class Sample:
    """One labeled observation: a feature vector and a dense class index."""

    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Hyperparameters:
    """Training and generation knobs.

    ``eta_*`` and ``lambda_*`` are the endpoints of geometric decay schedules
    over ``max_iter`` epochs. ``lambda_start=None`` resolves to
    ``neurons_per_class / 2``. ``noise_level`` is the Gaussian sigma applied in
    normalized feature units during generation, i.e. a fraction of each
    feature's observed range. ``batch_size`` only sets the cadence of debug
    loss logging inside an epoch; it never changes the update math.
    """

    neurons_per_class: int = 10
    max_iter: int = 100
    eta_start: float = 0.5
    eta_end: float = 0.01
    lambda_start: float | None = None
    lambda_end: float = 0.01
    noise_level: float = 0.1
    batch_size: int = 32
    seed: int = 0
    clip_to_range: bool = True

    def __post_init__(self):
        if self.lambda_start is None:
            object.__setattr__(self, "lambda_start", self.neurons_per_class / 2.0)
        if self.neurons_per_class < 1:
            raise ValueError("neurons_per_class must be >= 1")
        # max_iter = 0 is allowed and means "no training epochs".
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        for name in ("eta_start", "eta_end", "lambda_start", "lambda_end"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.eta_end > self.eta_start:
            raise ValueError("eta_end must not exceed eta_start")
        if self.lambda_end > self.lambda_start:
            raise ValueError("lambda_end must not exceed lambda_start")
        if self.noise_level < 0.0:
            raise ValueError("noise_level must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class Dataset:
    """Labeled feature matrix plus naming and normalization bookkeeping.

    ``features`` is (n, D) float64, ``labels`` is (n,) int64 with dense class
    indices into ``class_names``. ``ids`` are stable per-sample identities
    (row order at load) used by the evaluation harness for leak auditing.
    Instances are treated as immutable after construction.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    feature_names: list[str]
    norm_meta: np.ndarray
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "norm_meta", np.asarray(self.norm_meta, dtype=np.float64))
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(len(self.labels), dtype=np.int64))
        else:
            object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int64))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def samples(self) -> list[Sample]:
        return [Sample(self.features[i], int(self.labels[i])) for i in range(self.n_samples)]

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    @classmethod
    def from_arrays(cls, features, labels, class_names, feature_names=None,
                    norm_meta=None, ids=None) -> "Dataset":
        """Build a dataset, deriving feature names and norm_meta when omitted."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D array of shape (n, D)")
        if feature_names is None:
            feature_names = [f"f{j}" for j in range(features.shape[1])]
        if norm_meta is None:
            norm_meta = compute_norm_meta(features)
        return cls(features, labels, list(class_names), list(feature_names), norm_meta, ids)

    @classmethod
    def from_samples(cls, samples: list[Sample], class_names, feature_names,
                     norm_meta=None, ids=None) -> "Dataset":
        dims = {np.asarray(s.features).shape for s in samples}
        if len(dims) > 1:
            raise DataError(f"samples have inconsistent feature dimensions: {sorted(dims)}")
        features = np.asarray([s.features for s in samples], dtype=np.float64)
        labels = np.asarray([s.label for s in samples], dtype=np.int64)
        if norm_meta is None:
            norm_meta = compute_norm_meta(features)
        return cls(features, labels, list(class_names), list(feature_names), norm_meta, ids)

    def subset(self, indices) -> "Dataset":
        """Row subset; norm_meta is recomputed from the retained samples."""
        indices = np.asarray(indices, dtype=np.int64)
        feats = self.features[indices]
        return Dataset(feats, self.labels[indices], list(self.class_names),
                       list(self.feature_names), compute_norm_meta(feats),
                       self.ids[indices])


@dataclass(frozen=True)
class SNGModel:
    """Per-class prototype codebooks plus the training-loss trace.

    ``codebooks[c]`` is a (neurons_per_class, D) matrix in normalized feature
    space, aligned with ``class_names``. ``norm_meta`` is copied from the
    training data so generated samples can be mapped back to raw units.
    """

    codebooks: list[np.ndarray]
    loss_history: list[float]
    hyper: Hyperparameters
    class_names: list[str]
    feature_names: list[str]
    norm_meta: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def codebook_for(self, class_index: int) -> np.ndarray:
        return self.codebooks[class_index]


@dataclass(frozen=True)
class SyntheticBatch:
    """Generated samples in raw feature units with per-sample provenance.

    ``provenance`` is (m, 3) int: class index, source neuron index, and the
    sequential draw counter within the batch.
    """

    features: np.ndarray
    labels: np.ndarray
    provenance: np.ndarray
    class_names: list[str]
    feature_names: list[str]

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(self.features[i], int(self.labels[i])) for i in range(self.n_samples)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def compute_norm_meta(features: np.ndarray) -> np.ndarray:
    """Per-feature (min, max) observed in the given raw feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.size == 0:
        raise DataError("cannot compute normalization ranges of an empty matrix")
    return np.stack([features.min(axis=0), features.max(axis=0)], axis=1)


def _scales(norm_meta: np.ndarray) -> np.ndarray:
    # Constant features get scale 1 so the round trip stays exact.
    span = norm_meta[:, 1] - norm_meta[:, 0]
    return np.where(span > 0.0, span, 1.0)


def normalize_features(features: np.ndarray, norm_meta: np.ndarray) -> np.ndarray:
    """Map raw features to [0, 1] per feature using the given (min, max) ranges."""
    return (np.asarray(features, dtype=np.float64) - norm_meta[:, 0]) / _scales(norm_meta)


def denormalize_features(features: np.ndarray, norm_meta: np.ndarray) -> np.ndarray:
    """Inverse of :func:`normalize_features`."""
    return np.asarray(features, dtype=np.float64) * _scales(norm_meta) + norm_meta[:, 0]


def normalize_dataset(dataset: Dataset, norm_meta: np.ndarray | None = None) -> Dataset:
    """Dataset with features normalized; norm_meta keeps the raw-unit ranges used."""
    meta = dataset.norm_meta if norm_meta is None else np.asarray(norm_meta, dtype=np.float64)
    return Dataset(normalize_features(dataset.features, meta), dataset.labels,
                   list(dataset.class_names), list(dataset.feature_names), meta, dataset.ids)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_dataset(dataset: Dataset) -> list[str]:
    """Check dataset invariants; returns one finding string per violation.

    An empty list means the dataset is well formed. Nothing is raised here so
    callers can decide how strict to be.
    """
    findings: list[str] = []
    feats = dataset.features
    n, d = feats.shape

    if d != len(dataset.feature_names):
        findings.append(
            f"dimension mismatch: features have {d} columns but "
            f"{len(dataset.feature_names)} feature names are declared")
    if dataset.norm_meta.shape != (d, 2):
        findings.append(
            f"dimension mismatch: norm_meta has shape {dataset.norm_meta.shape}, "
            f"expected ({d}, 2)")
    else:
        bad = np.flatnonzero(dataset.norm_meta[:, 0] > dataset.norm_meta[:, 1])
        for j in bad:
            findings.append(f"norm_meta for column {_col_name(dataset, j)}: min > max")

    finite = np.isfinite(feats)
    if not finite.all():
        rows, cols = np.nonzero(~finite)
        for r, c in zip(rows, cols):
            findings.append(
                f"row {r}, column {_col_name(dataset, c)}: non-finite value {feats[r, c]}")

    if len(dataset.labels) != n:
        findings.append(f"label count {len(dataset.labels)} does not match {n} samples")
    out_of_range = np.flatnonzero(
        (dataset.labels < 0) | (dataset.labels >= dataset.num_classes))
    for r in out_of_range:
        findings.append(f"row {r}: label {dataset.labels[r]} is not a valid class index")

    counts = np.bincount(
        dataset.labels[(dataset.labels >= 0) & (dataset.labels < dataset.num_classes)],
        minlength=dataset.num_classes)
    for c in np.flatnonzero(counts == 0):
        findings.append(f"empty class: {dataset.class_names[c]!r} has no samples")

    return findings


def _col_name(dataset: Dataset, j: int) -> str:
    if j < len(dataset.feature_names):
        return repr(dataset.feature_names[j])
    return str(j)


def require_valid(dataset: Dataset) -> None:
    """Raise DataError with all findings if the dataset violates any invariant."""
    findings = validate_dataset(dataset)
    if findings:
        raise DataError("invalid dataset: " + "; ".join(findings))


# ---------------------------------------------------------------------------
# Model serialization (single self-describing JSON document)
# ---------------------------------------------------------------------------

def model_to_dict(model: SNGModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "hyperparameters": model.hyper.to_dict(),
        "class_names": list(model.class_names),
        "feature_names": list(model.feature_names),
        "norm_meta": [[float(lo), float(hi)] for lo, hi in model.norm_meta],
        "codebooks": {name: model.codebooks[c].tolist()
                      for c, name in enumerate(model.class_names)},
        "loss_history": [float(v) for v in model.loss_history],
    }


def model_from_dict(doc: dict) -> SNGModel:
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format {version!r}, expected {MODEL_FORMAT_VERSION!r}")
    try:
        hyper = Hyperparameters.from_dict(doc["hyperparameters"])
        class_names = [str(c) for c in doc["class_names"]]
        feature_names = [str(f) for f in doc["feature_names"]]
        norm_meta = np.asarray(doc["norm_meta"], dtype=np.float64)
        codebooks = [np.asarray(doc["codebooks"][name], dtype=np.float64)
                     for name in class_names]
        loss_history = [float(v) for v in doc["loss_history"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc
    d = len(feature_names)
    for name, cb in zip(class_names, codebooks):
        if cb.ndim != 2 or cb.shape[1] != d or not np.isfinite(cb).all():
            raise DataError(f"codebook for class {name!r} is not a finite matrix of width {d}")
    return SNGModel(codebooks, loss_history, hyper, class_names, feature_names, norm_meta)


def save_model(model: SNGModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> SNGModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"model file {path} does not contain a JSON object")
    return model_from_dict(doc)


def models_equal(a: SNGModel, b: SNGModel) -> bool:
    """Field-for-field equality, exact on all array contents."""
    return (
        a.hyper == b.hyper
        and a.class_names == b.class_names
        and a.feature_names == b.feature_names
        and np.array_equal(a.norm_meta, b.norm_meta)
        and len(a.codebooks) == len(b.codebooks)
        and all(np.array_equal(x, y) for x, y in zip(a.codebooks, b.codebooks))
        and len(a.loss_history) == len(b.loss_history)
        and all(x == y for x, y in zip(a.loss_history, b.loss_history))
    )


