"""Split/run/metric harness: repeated stratified holdout over three data regimes.

Each run derives its own seed (base + run index), splits the raw data,
trains a codebook model on the train split, generates a synthetic batch, and
fits the configured downstream classifier on each requested regime:

* ``original``       - the train split only
* ``synthetic_only`` - generated samples only
* ``mixed``          - train split plus generated samples

All regimes are scored on the run's untouched test split; synthetic data
never enters a test set.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np

from .core_model import (Dataset, Hyperparameters, normalize_dataset,
                         normalize_features)
from .neural_gas import train_supervised
from .synthesis import fidelity_mse, generate

REGIMES = ("original", "synthetic_only", "mixed")


@dataclass(frozen=True)
class ExperimentConfig:
    train_fraction: float = 0.7
    runs: int = 5
    regimes: tuple = REGIMES
    classifier: str = "logreg"
    seed: int = 0
    synthetic_samples: int = 2000

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        regimes = tuple(self.regimes)
        if not regimes:
            raise ValueError("at least one regime must be requested")
        unknown = [r for r in regimes if r not in REGIMES]
        if unknown:
            raise ValueError(f"unknown regimes {unknown}; valid: {list(REGIMES)}")
        # canonical order, duplicates dropped
        object.__setattr__(self, "regimes", tuple(r for r in REGIMES if r in regimes))
        if self.synthetic_samples < 1:
            raise ValueError("synthetic_samples must be >= 1")


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def stratified_split(dataset: Dataset, train_fraction: float,
                     seed: int) -> tuple[Dataset, Dataset]:
    """Per-class shuffled holdout preserving class proportions within one sample.

    Every class keeps at least one sample on each side, so classes with a
    single sample are rejected.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for c in range(dataset.num_classes):
        idx = dataset.class_indices(c)
        if idx.size < 2:
            raise ValueError(
                f"class {dataset.class_names[c]!r} has {idx.size} sample(s); "
                "need at least 2 to stratify")
        perm = idx[rng.permutation(idx.size)]
        n_train = int(np.floor(train_fraction * idx.size))
        n_train = min(max(n_train, 1), idx.size - 1)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    return (dataset.subset(np.concatenate(train_idx)),
            dataset.subset(np.concatenate(test_idx)))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsBundle:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_f1: np.ndarray
    confusion_counts: np.ndarray
    confusion_percent: np.ndarray


def classify_metrics(predictions, truth, num_classes: int) -> MetricsBundle:
    """Accuracy, macro precision/recall/F1 (0/0 -> 0), and the row-normalized
    percentage confusion matrix (rows = truth)."""
    predictions = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise ValueError("predictions and truth must be equal-length 1-D sequences")
    if predictions.size == 0:
        raise ValueError("cannot compute metrics of empty label lists")

    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (truth, predictions), 1)

    diag = np.diag(counts).astype(np.float64)
    truth_totals = counts.sum(axis=1).astype(np.float64)
    pred_totals = counts.sum(axis=0).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_totals > 0, diag / pred_totals, 0.0)
        recall = np.where(truth_totals > 0, diag / truth_totals, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
        percent = np.where(truth_totals[:, None] > 0,
                           counts / np.where(truth_totals[:, None] > 0,
                                             truth_totals[:, None], 1.0) * 100.0,
                           0.0)

    return MetricsBundle(
        accuracy=float((predictions == truth).mean()),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_f1=f1,
        confusion_counts=counts,
        confusion_percent=percent,
    )


# ---------------------------------------------------------------------------
# Built-in classifiers (deterministic; XGBoost-style externals plug in via
# register_classifier)
# ---------------------------------------------------------------------------

class MultinomialLogisticRegression:
    """Softmax regression fit by full-batch gradient descent.

    Fixed step size, fixed epoch count, zero-initialized weights: the fit is
    fully deterministic for a given training set.
    """

    def __init__(self, learning_rate: float = 0.5, epochs: int = 300):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.weights = None   # (C, D)
        self.bias = None      # (C,)

    def fit(self, features: np.ndarray, labels: np.ndarray, num_classes: int):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        n, d = features.shape
        self.weights = np.zeros((num_classes, d))
        self.bias = np.zeros(num_classes)
        onehot = np.zeros((n, num_classes))
        onehot[np.arange(n), labels] = 1.0
        for _ in range(self.epochs):
            probs = self._softmax(features @ self.weights.T + self.bias)
            grad = probs - onehot
            self.weights -= self.learning_rate * (grad.T @ features) / n
            self.bias -= self.learning_rate * grad.mean(axis=0)
        return self

    @staticmethod
    def _softmax(z: np.ndarray) -> np.ndarray:
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ValueError("classifier has not been fitted")
        scores = np.asarray(features, dtype=np.float64) @ self.weights.T + self.bias
        return scores.argmax(axis=1).astype(np.int64)


class KNearestNeighbors:
    """Euclidean k-NN vote; ties break toward the lowest class index."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self._features = None
        self._labels = None
        self._num_classes = None

    def fit(self, features: np.ndarray, labels: np.ndarray, num_classes: int):
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] == 0:
            raise ValueError("cannot fit on an empty training set")
        self._features = features
        self._labels = np.asarray(labels, dtype=np.int64)
        self._num_classes = num_classes
        return self

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self._features is None:
            raise ValueError("classifier has not been fitted")
        features = np.asarray(features, dtype=np.float64)
        k = min(self.k, self._features.shape[0])
        out = np.empty(features.shape[0], dtype=np.int64)
        for i, x in enumerate(features):
            d2 = ((self._features - x) ** 2).sum(axis=1)
            # stable sort: equidistant neighbors resolve by training row order
            nearest = np.argsort(d2, kind="stable")[:k]
            votes = np.bincount(self._labels[nearest], minlength=self._num_classes)
            out[i] = votes.argmax()
        return out


_CLASSIFIERS: dict = {
    "logreg": MultinomialLogisticRegression,
    "knn": KNearestNeighbors,
}


def register_classifier(name: str, factory) -> None:
    """Register a classifier factory; instances need fit(X, y, C) and predict(X)."""
    _CLASSIFIERS[name] = factory


def make_classifier(name: str):
    if name not in _CLASSIFIERS:
        raise ValueError(f"unknown classifier {name!r}; registered: {sorted(_CLASSIFIERS)}")
    return _CLASSIFIERS[name]()


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------

@dataclass
class RegimeResult:
    mean_accuracy: float
    std_accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    train_time_ms: float
    confusion_percent: np.ndarray
    fidelity_mse: float | None
    train_size: int


@dataclass
class EvaluationReport:
    regimes: dict
    per_run: list
    config: ExperimentConfig
    hyper: Hyperparameters
    class_names: list[str]
    test_size: int = 0

    def to_dict(self) -> dict:
        return {
            "config": {
                "train_fraction": self.config.train_fraction,
                "runs": self.config.runs,
                "regimes": list(self.config.regimes),
                "classifier": self.config.classifier,
                "seed": self.config.seed,
                "synthetic_samples": self.config.synthetic_samples,
            },
            "hyperparameters": self.hyper.to_dict(),
            "class_names": list(self.class_names),
            "test_size": self.test_size,
            "regimes": {
                name: {
                    "mean_accuracy": r.mean_accuracy,
                    "std_accuracy": r.std_accuracy,
                    "macro_precision": r.macro_precision,
                    "macro_recall": r.macro_recall,
                    "macro_f1": r.macro_f1,
                    "train_time_ms": r.train_time_ms,
                    "confusion_percent": r.confusion_percent.tolist(),
                    "fidelity_mse": r.fidelity_mse,
                    "train_size": r.train_size,
                }
                for name, r in self.regimes.items()
            },
            "per_run": self.per_run,
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)


def run_experiment(original: Dataset, model_hyper: Hyperparameters,
                   config: ExperimentConfig) -> EvaluationReport:
    """Execute the full protocol and aggregate mean/std across runs."""
    per_run: list = []
    acc: dict = {r: [] for r in config.regimes}
    prec: dict = {r: [] for r in config.regimes}
    rec: dict = {r: [] for r in config.regimes}
    f1s: dict = {r: [] for r in config.regimes}
    confusions: dict = {r: [] for r in config.regimes}
    train_sizes: dict = {r: 0 for r in config.regimes}
    sng_times: list[float] = []
    fidelities: list[float] = []
    test_size = 0

    for r in range(config.runs):
        run_seed = config.seed + r
        train_raw, test_raw = stratified_split(original, config.train_fraction, run_seed)
        test_size = test_raw.n_samples

        train_norm = normalize_dataset(train_raw)
        hyper_r = replace(model_hyper, seed=run_seed)
        t0 = time.perf_counter()
        model = train_supervised(train_norm, hyper_r)
        sng_ms = (time.perf_counter() - t0) * 1000.0
        sng_times.append(sng_ms)

        batch = generate(model, config.synthetic_samples, run_seed)
        syn_norm = normalize_features(batch.features, train_raw.norm_meta)
        test_feats = normalize_features(test_raw.features, train_raw.norm_meta)

        needs_fidelity = any(rg != "original" for rg in config.regimes)
        run_fidelity = fidelity_mse(train_raw, batch) if needs_fidelity else None
        if run_fidelity is not None:
            fidelities.append(run_fidelity)

        train_ids = set(train_raw.ids.tolist())
        test_ids = set(test_raw.ids.tolist())
        if train_ids & test_ids:
            raise AssertionError("train/test identity leak detected")

        run_record = {
            "run": r,
            "seed": run_seed,
            "train_ids": sorted(train_ids),
            "test_ids": sorted(test_ids),
            "sng_train_ms": sng_ms,
            "fidelity_mse": run_fidelity,
            "regimes": {},
        }

        for regime in config.regimes:
            if regime == "original":
                X = train_norm.features
                y = train_norm.labels
            elif regime == "synthetic_only":
                X = syn_norm
                y = batch.labels
            else:
                X = np.concatenate([train_norm.features, syn_norm])
                y = np.concatenate([train_norm.labels, batch.labels])
            train_sizes[regime] = X.shape[0]

            clf = make_classifier(config.classifier)
            clf.fit(X, y, original.num_classes)
            m = classify_metrics(clf.predict(test_feats), test_raw.labels,
                                 original.num_classes)
            acc[regime].append(m.accuracy)
            prec[regime].append(m.macro_precision)
            rec[regime].append(m.macro_recall)
            f1s[regime].append(m.macro_f1)
            confusions[regime].append(m.confusion_percent)
            run_record["regimes"][regime] = {
                "accuracy": m.accuracy,
                "macro_precision": m.macro_precision,
                "macro_recall": m.macro_recall,
                "macro_f1": m.macro_f1,
                "confusion_percent": m.confusion_percent.tolist(),
            }
        per_run.append(run_record)

    mean_fidelity = float(np.mean(fidelities)) if fidelities else None
    mean_sng_ms = float(np.mean(sng_times))
    regimes = {
        regime: RegimeResult(
            mean_accuracy=float(np.mean(acc[regime])),
            std_accuracy=float(np.std(acc[regime])),
            macro_precision=float(np.mean(prec[regime])),
            macro_recall=float(np.mean(rec[regime])),
            macro_f1=float(np.mean(f1s[regime])),
            train_time_ms=mean_sng_ms,
            confusion_percent=np.mean(confusions[regime], axis=0),
            fidelity_mse=mean_fidelity if regime != "original" else None,
            train_size=train_sizes[regime],
        )
        for regime in config.regimes
    }
    return EvaluationReport(regimes, per_run, config, model_hyper,
                            list(original.class_names), test_size)


def format_report_table(report: EvaluationReport) -> str:
    """Aligned plain-text table: metric rows by regime columns."""
    names = list(report.regimes)
    rows = [
        ("Avg Acc", ["{:.2f} %".format(report.regimes[n].mean_accuracy * 100) for n in names]),
        ("std", ["{:.3f}".format(report.regimes[n].std_accuracy) for n in names]),
        ("Precision", ["{:.2f}".format(report.regimes[n].macro_precision) for n in names]),
        ("Recall", ["{:.2f}".format(report.regimes[n].macro_recall) for n in names]),
        ("F1 Score", ["{:.2f}".format(report.regimes[n].macro_f1) for n in names]),
        ("Train Runtime", ["{:.0f} ms".format(report.regimes[n].train_time_ms) for n in names]),
        ("MSE", ["-" if report.regimes[n].fidelity_mse is None
                 else "{:.3f}".format(report.regimes[n].fidelity_mse) for n in names]),
        ("Train Size", [str(report.regimes[n].train_size) for n in names]),
    ]
    header = ["Metric"] + names
    widths = [max(len(header[0]), *(len(r[0]) for r in rows))]
    for j, name in enumerate(names):
        widths.append(max(len(name), *(len(r[1][j]) for r in rows)))
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for label, cells in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip([label] + cells, widths)))

    lines.append("")
    lines.append(f"Confusion matrices (row-normalized %, test size {report.test_size}):")
    for n in names:
        lines.append(f"  [{n}]")
        for c, row in enumerate(report.regimes[n].confusion_percent):
            cells = " ".join(f"{v:5.1f}" for v in row)
            lines.append(f"    {report.class_names[c]:>12}  [{cells}]")
    return "\n".join(lines)
