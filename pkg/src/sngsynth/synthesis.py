"""Class-conditional sample generation from trained codebooks.

A synthetic sample is a class prototype plus isotropic Gaussian noise in
normalized feature space: x = w + noise_level * N(0, I). Samples are
denormalized back to raw units before they leave this module.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core_model import (Dataset, SNGModel, SyntheticBatch, denormalize_features,
                         normalize_features)


def allocate_counts(total_samples: int, num_classes: int) -> np.ndarray:
    """Equal per-class counts; the remainder goes to the lowest class indices."""
    base, extra = divmod(total_samples, num_classes)
    counts = np.full(num_classes, base, dtype=np.int64)
    counts[:extra] += 1
    return counts


def generate(model: SNGModel, total_samples: int, seed: int,
             noise_level: float | None = None,
             selection: str = "uniform") -> SyntheticBatch:
    """Draw ``total_samples`` synthetic samples, balanced across classes.

    Per sample, a source neuron is chosen from the class codebook (uniformly
    at random, or round-robin with ``selection="round_robin"``), then Gaussian
    noise scaled by ``noise_level`` (default: the model's trained value) is
    added in normalized space. With ``clip_to_range`` set on the model's
    hyperparameters, features are clamped to [0, 1] before denormalization.
    """
    if model.num_classes == 0 or any(cb.shape[0] == 0 for cb in model.codebooks):
        raise ValueError("model has no trained codebooks")
    if total_samples < 1:
        raise ValueError("total_samples must be >= 1")
    if noise_level is None:
        noise_level = model.hyper.noise_level
    if noise_level < 0:
        raise ValueError("noise_level must be non-negative")
    if selection not in ("uniform", "round_robin"):
        raise ValueError(f"unknown selection mode {selection!r}")

    counts = allocate_counts(total_samples, model.num_classes)
    if total_samples < model.num_classes:
        empty = [model.class_names[c] for c in np.flatnonzero(counts == 0)]
        warnings.warn(
            f"total_samples={total_samples} is below the number of classes; "
            f"classes {empty} receive no samples")

    rng = np.random.default_rng(seed)
    dim = model.dim
    feats = np.empty((total_samples, dim), dtype=np.float64)
    labels = np.empty(total_samples, dtype=np.int64)
    provenance = np.empty((total_samples, 3), dtype=np.int64)

    pos = 0
    for c, count in enumerate(counts):
        if count == 0:
            continue
        codebook = model.codebooks[c]
        if selection == "uniform":
            neuron_idx = rng.integers(0, codebook.shape[0], size=count)
        else:
            neuron_idx = np.arange(count, dtype=np.int64) % codebook.shape[0]
        noise = rng.standard_normal((count, dim)) * noise_level
        block = codebook[neuron_idx] + noise
        if model.hyper.clip_to_range:
            np.clip(block, 0.0, 1.0, out=block)
        feats[pos:pos + count] = block
        labels[pos:pos + count] = c
        provenance[pos:pos + count, 0] = c
        provenance[pos:pos + count, 1] = neuron_idx
        provenance[pos:pos + count, 2] = np.arange(pos, pos + count)
        pos += count

    return SyntheticBatch(denormalize_features(feats, model.norm_meta), labels,
                          provenance, list(model.class_names), list(model.feature_names))


def fidelity_mse(original: Dataset, synthetic: SyntheticBatch) -> float:
    """Mean squared per-feature gap between synthetic samples and their
    nearest same-class originals, in the original dataset's normalized space.

    Each synthetic sample is matched to the closest original of the same class
    (Euclidean; ties go to the lowest original row index); the squared errors
    are averaged over all synthetic samples and all features.
    """
    if original.n_samples == 0 or synthetic.n_samples == 0:
        raise ValueError("both original and synthetic sets must be non-empty")
    if original.dim != synthetic.features.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: original has {original.dim}, "
            f"synthetic has {synthetic.features.shape[1]}")

    orig_norm = normalize_features(original.features, original.norm_meta)
    syn_norm = normalize_features(synthetic.features, original.norm_meta)

    name_to_index = {name: c for c, name in enumerate(original.class_names)}
    total = 0.0
    for c_syn, name in enumerate(synthetic.class_names):
        mask = synthetic.labels == c_syn
        if not mask.any():
            continue
        if name not in name_to_index:
            raise ValueError(f"class {name!r} present in synthetic data but absent "
                             "from the original dataset")
        orig_pts = orig_norm[original.labels == name_to_index[name]]
        syn_pts = syn_norm[mask]
        d2 = ((syn_pts[:, None, :] - orig_pts[None, :, :]) ** 2).sum(axis=2)
        # argmin picks the first minimum, i.e. the lowest original row index
        matched = orig_pts[d2.argmin(axis=1)]
        total += ((syn_pts - matched) ** 2).sum()
    return total / (synthetic.n_samples * original.dim)
