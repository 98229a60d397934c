"""Supervised neural gas codebooks for class-conditional synthetic tabular data.

Train one prototype codebook per class with rank-based competitive learning,
sample synthetic data by adding Gaussian noise to the learned prototypes, and
measure how well the synthetic data stands in for the original through a
repeated stratified holdout harness.
"""

from .core_model import (DataError, Dataset, Hyperparameters, Sample, SNGModel,
                         SyntheticBatch, compute_norm_meta, denormalize_features,
                         load_model, model_from_dict, model_to_dict,
                         normalize_dataset, normalize_features, save_model,
                         validate_dataset)
from .data_io import (CsvSchema, load_csv, make_blobs, make_ring,
                      write_dataset_csv, write_loss_csv, write_synthetic_csv)
from .evaluation import (EvaluationReport, ExperimentConfig, KNearestNeighbors,
                         MultinomialLogisticRegression, classify_metrics,
                         format_report_table, register_classifier,
                         run_experiment, stratified_split)
from .neural_gas import (RankedNeuron, lambda_at, learning_rate_at,
                         neighborhood_weight, quantization_loss, rank_neurons,
                         train_supervised, train_unsupervised)
from .synthesis import allocate_counts, fidelity_mse, generate

__version__ = "0.1.0"

__all__ = [
    "CsvSchema", "DataError", "Dataset", "EvaluationReport", "ExperimentConfig",
    "Hyperparameters", "KNearestNeighbors", "MultinomialLogisticRegression",
    "RankedNeuron", "SNGModel", "Sample", "SyntheticBatch", "allocate_counts",
    "classify_metrics", "compute_norm_meta", "denormalize_features",
    "fidelity_mse", "format_report_table", "generate", "lambda_at",
    "learning_rate_at", "load_csv", "load_model", "make_blobs", "make_ring",
    "model_from_dict", "model_to_dict", "neighborhood_weight",
    "normalize_dataset", "normalize_features", "quantization_loss",
    "rank_neurons", "register_classifier", "run_experiment", "save_model",
    "stratified_split", "train_supervised", "train_unsupervised",
    "validate_dataset", "write_dataset_csv", "write_loss_csv",
    "write_synthetic_csv",
]
