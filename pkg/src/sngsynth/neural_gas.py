"""Rank-based competitive learning: schedules, ranking, and the training loops.

Two entry points share one update rule. ``train_supervised`` keeps an
independent codebook per class and feeds each sample only to its own class's
neurons; ``train_unsupervised`` runs a single global codebook (the topology
demo). For an input x, every neuron w of the active codebook moves by

    w <- w + eta(t) * exp(-k / lambda(t)) * (x - w)

where k is the neuron's distance rank for x (0 = closest) and t is the epoch
index. Updates are online in shuffled order; eta and lambda decay
geometrically from their start to end values over ``max_iter`` epochs.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .core_model import Dataset, Hyperparameters, SNGModel, require_valid

logger = logging.getLogger(__name__)

# Spawn keys for the independent RNG streams derived from one seed. Keeping
# initialization per-class makes a class's codebook reproducible regardless of
# how many draws other classes consumed.
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1


def init_rng(seed: int, class_index: int) -> np.random.Generator:
    """Generator for initializing the codebook of one class."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_INIT_STREAM, class_index)))


def shuffle_rng(seed: int) -> np.random.Generator:
    """Generator producing the per-epoch sample permutations."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SHUFFLE_STREAM,)))


# ---------------------------------------------------------------------------
# Schedules and neighborhood
# ---------------------------------------------------------------------------

def _geometric_schedule(t: int, start: float, end: float, max_iter: int) -> float:
    if t < 0 or t > max_iter:
        raise ValueError(f"iteration index {t} outside [0, {max_iter}]")
    if max_iter == 0:
        return start
    return start * (end / start) ** (t / max_iter)


def learning_rate_at(t: int, hyper: Hyperparameters) -> float:
    """eta(t) = eta_start * (eta_end / eta_start)^(t / max_iter)."""
    return _geometric_schedule(t, hyper.eta_start, hyper.eta_end, hyper.max_iter)


def lambda_at(t: int, hyper: Hyperparameters) -> float:
    """lambda(t) = lambda_start * (lambda_end / lambda_start)^(t / max_iter)."""
    return _geometric_schedule(t, hyper.lambda_start, hyper.lambda_end, hyper.max_iter)


def neighborhood_weight(k: float, lam: float) -> float:
    """exp(-k / lam): 1 at rank 0, decaying with rank."""
    if lam <= 0.0:
        raise ValueError(f"neighborhood range must be positive, got {lam}")
    if k < 0:
        raise ValueError(f"rank must be non-negative, got {k}")
    return float(np.exp(-k / lam))


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------

class RankedNeuron:
    """A neuron's position when a codebook is sorted by distance to an input."""

    __slots__ = ("neuron_index", "rank", "distance")

    def __init__(self, neuron_index: int, rank: int, distance: float):
        self.neuron_index = neuron_index
        self.rank = rank
        self.distance = distance

    def __repr__(self):
        return (f"RankedNeuron(neuron_index={self.neuron_index}, "
                f"rank={self.rank}, distance={self.distance:.6g})")

    def __eq__(self, other):
        return (isinstance(other, RankedNeuron)
                and (self.neuron_index, self.rank, self.distance)
                == (other.neuron_index, other.rank, other.distance))


def rank_neurons(x: np.ndarray, codebook: np.ndarray) -> list[RankedNeuron]:
    """All neurons ordered by ascending Euclidean distance to x.

    Ties break toward the lower neuron index, so the result is deterministic.
    The returned list is sorted by rank (element 0 is the winner).
    """
    x = np.asarray(x, dtype=np.float64)
    codebook = np.asarray(codebook, dtype=np.float64)
    if codebook.ndim != 2 or codebook.shape[0] == 0:
        raise ValueError("codebook must be a non-empty (K, D) matrix")
    if x.shape != (codebook.shape[1],):
        raise ValueError(
            f"input dimension {x.shape} does not match codebook width {codebook.shape[1]}")
    order = _rank_order(x, codebook)
    d = np.sqrt(((codebook - x) ** 2).sum(axis=1))
    return [RankedNeuron(int(j), rank, float(d[j])) for rank, j in enumerate(order)]


def _rank_order(x: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    # Squared distances rank identically to Euclidean; stable sort gives the
    # ascending-index tie break.
    d2 = ((codebook - x) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _init_codebook(class_points: np.ndarray, n_neurons: int,
                   rng: np.random.Generator, label: str) -> np.ndarray:
    """Data-seeded initialization: n_neurons distinct samples of the class.

    Falls back to sampling with replacement plus a small uniform jitter when
    the class is smaller than the codebook.
    """
    n = class_points.shape[0]
    if n >= n_neurons:
        idx = rng.choice(n, size=n_neurons, replace=False)
        return class_points[idx].copy()
    warnings.warn(
        f"class {label!r} has {n} samples but {n_neurons} neurons were requested; "
        "initializing with replacement plus jitter")
    idx = rng.choice(n, size=n_neurons, replace=True)
    jitter = rng.uniform(-1e-3, 1e-3, size=(n_neurons, class_points.shape[1]))
    return class_points[idx] + jitter


def _run_epochs(codebooks: list[np.ndarray], features: np.ndarray,
                labels: np.ndarray, hyper: Hyperparameters) -> list[float]:
    """Online epoch loop over possibly many codebooks; mutates them in place.

    Each sample updates only codebooks[labels[i]]. Losses are measured in a
    separate pass after each epoch's updates so they do not depend on the
    shuffle order.
    """
    n = features.shape[0]
    rng = shuffle_rng(hyper.seed)
    losses: list[float] = []
    log_debug = logger.isEnabledFor(logging.DEBUG)

    for t in range(hyper.max_iter):
        eta = learning_rate_at(t, hyper)
        lam = lambda_at(t, hyper)
        h_by_rank = np.exp(-np.arange(codebooks[0].shape[0]) / lam)[:, None]
        perm = rng.permutation(n)
        for step, i in enumerate(perm):
            w = codebooks[labels[i]]
            diff = features[i] - w
            order = np.argsort((diff ** 2).sum(axis=1), kind="stable")
            w[order] += eta * h_by_rank * diff[order]
            if log_debug and (step + 1) % hyper.batch_size == 0:
                logger.debug("epoch %d step %d: running loss %.6g", t, step + 1,
                             quantization_loss(features, labels, codebooks))
        losses.append(quantization_loss(features, labels, codebooks))
    return losses


def quantization_loss(features: np.ndarray, labels: np.ndarray,
                      codebooks: list[np.ndarray]) -> float:
    """Mean squared distance from each sample to its own class's best prototype."""
    total = 0.0
    for c, w in enumerate(codebooks):
        pts = features[labels == c]
        if pts.shape[0] == 0:
            continue
        d2 = ((pts[:, None, :] - w[None, :, :]) ** 2).sum(axis=2)
        total += d2.min(axis=1).sum()
    return total / features.shape[0]


def train_supervised(dataset: Dataset, hyper: Hyperparameters) -> SNGModel:
    """Fit one codebook per class on a normalized dataset.

    The dataset must already be normalized (see core_model.normalize_dataset);
    the returned model snapshots the dataset's norm_meta for later
    denormalization. loss_history has one entry per completed epoch.
    """
    require_valid(dataset)
    features = dataset.features
    labels = dataset.labels
    codebooks = [
        _init_codebook(features[labels == c], hyper.neurons_per_class,
                       init_rng(hyper.seed, c), dataset.class_names[c])
        for c in range(dataset.num_classes)
    ]
    losses = _run_epochs(codebooks, features, labels, hyper)
    return SNGModel(codebooks, losses, hyper, list(dataset.class_names),
                    list(dataset.feature_names), dataset.norm_meta.copy())


def _init_unsupervised(points: np.ndarray, n_neurons: int,
                       rng: np.random.Generator) -> np.ndarray:
    # Uniform in the data bounding box, so the demo starts away from the
    # target shape and visibly fits it (and so the initial quantization error
    # is not already near-optimal when n_neurons approaches n_points).
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    return rng.uniform(lo, hi, size=(n_neurons, points.shape[1]))


def train_unsupervised(points: np.ndarray, n_neurons: int, hyper: Hyperparameters,
                       snapshot_hook=None) -> tuple[np.ndarray, list[float]]:
    """Fit a single global codebook to unlabeled points.

    ``snapshot_hook(epoch, codebook_copy)`` is invoked with the initial state
    (epoch 0) and after every epoch, for checkpoint export.
    Returns (prototype matrix, per-epoch loss history).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty (n, D) matrix")
    if n_neurons < 1:
        raise ValueError("n_neurons must be >= 1")
    if not np.isfinite(points).all():
        raise ValueError("points contain non-finite values")

    codebook = _init_unsupervised(points, n_neurons, init_rng(hyper.seed, 0))
    if snapshot_hook is not None:
        snapshot_hook(0, codebook.copy())

    labels = np.zeros(points.shape[0], dtype=np.int64)
    losses: list[float] = []
    rng = shuffle_rng(hyper.seed)
    for t in range(hyper.max_iter):
        eta = learning_rate_at(t, hyper)
        lam = lambda_at(t, hyper)
        h_by_rank = np.exp(-np.arange(n_neurons) / lam)[:, None]
        for i in rng.permutation(points.shape[0]):
            diff = points[i] - codebook
            order = np.argsort((diff ** 2).sum(axis=1), kind="stable")
            codebook[order] += eta * h_by_rank * diff[order]
        losses.append(quantization_loss(points, labels, [codebook]))
        if snapshot_hook is not None:
            snapshot_hook(t + 1, codebook.copy())
    return codebook, losses
