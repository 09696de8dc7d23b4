"""Pair datasets, classifiers, and evaluation for same-task prediction."""

from untangler.learner.datasets import (
    PAIR_WINDOW_SECONDS,
    Dataset,
    DatasetError,
    PairSample,
    build_pairs,
    dataset_from_text,
    dataset_to_text,
    merge_datasets,
    read_dataset,
    rebalance,
    write_dataset,
)
from untangler.learner.models import (
    ForestConfig,
    LearnError,
    LogisticConfig,
    LogisticModel,
    NaiveBayesModel,
    RandomForestModel,
    make_trainer,
    model_from_document,
    model_to_document,
    predict,
    predict_batch,
    read_model,
    train_logistic,
    train_naive_bayes,
    train_random_forest,
    write_model,
)
from untangler.learner.evaluation import (
    Metrics,
    TrimResult,
    auc_rank,
    cross_validate,
    evaluate_metrics,
    mean_metrics,
    metrics_from_scores,
    permutation_importance,
    permutation_importance_runs,
    run_dev_experiment,
    trim_voters,
    trim_voters_detailed,
)

__all__ = [
    "PAIR_WINDOW_SECONDS",
    "PairSample",
    "Dataset",
    "DatasetError",
    "build_pairs",
    "rebalance",
    "merge_datasets",
    "dataset_to_text",
    "dataset_from_text",
    "write_dataset",
    "read_dataset",
    "LearnError",
    "LogisticConfig",
    "ForestConfig",
    "LogisticModel",
    "NaiveBayesModel",
    "RandomForestModel",
    "train_logistic",
    "train_naive_bayes",
    "train_random_forest",
    "make_trainer",
    "predict",
    "predict_batch",
    "model_to_document",
    "model_from_document",
    "write_model",
    "read_model",
    "Metrics",
    "TrimResult",
    "metrics_from_scores",
    "auc_rank",
    "evaluate_metrics",
    "mean_metrics",
    "cross_validate",
    "permutation_importance",
    "permutation_importance_runs",
    "trim_voters",
    "trim_voters_detailed",
    "run_dev_experiment",
]
