"""Classification metrics, cross validation, importance, and voter trimming."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from untangler.events import Clustering, SessionLog
from untangler.learner.datasets import (
    PAIR_WINDOW_SECONDS,
    Dataset,
    DatasetError,
    build_pairs,
    merge_datasets,
    rebalance,
)
from untangler.learner.models import LearnError, Model, Trainer, predict_batch
from untangler.seeding import mix_seed, rng_for


@dataclass(frozen=True)
class Metrics:
    """Thresholded confusion metrics plus threshold-free AUC.

    ``auc`` is None when the evaluated set contains a single class.
    """

    auc: float | None
    acc: float
    prec: float
    rec: float
    fmeasure: float
    gmean: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self) -> dict:
        return {
            "auc": self.auc,
            "acc": self.acc,
            "prec": self.prec,
            "rec": self.rec,
            "fmeasure": self.fmeasure,
            "gmean": self.gmean,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        }


def auc_rank(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Probability a random true sample outscores a random false one.

    Computed from average ranks, so tied scores count one half. Equals
    brute-force counting over all true/false pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_true = int(labels.sum())
    n_false = labels.size - n_true
    if n_true == 0 or n_false == 0:
        return None
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    average_ranks = (ends - counts + 1 + ends) / 2.0
    ranks = average_ranks[inverse]
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - n_true * (n_true + 1) / 2.0) / (n_true * n_false)


def metrics_from_scores(
    scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5
) -> Metrics:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    predicted = scores >= threshold
    tp = int((predicted & labels).sum())
    fp = int((predicted & ~labels).sum())
    fn = int((~predicted & labels).sum())
    tn = int((~predicted & ~labels).sum())
    total = tp + fp + fn + tn
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    return Metrics(
        auc=auc_rank(scores, labels),
        acc=(tp + tn) / total if total else 0.0,
        prec=prec,
        rec=rec,
        fmeasure=2 * prec * rec / (prec + rec) if prec + rec else 0.0,
        gmean=float(np.sqrt(rec * specificity)),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


def evaluate_metrics(model: Model, ds: Dataset, threshold: float = 0.5) -> Metrics:
    if not ds.samples:
        raise LearnError("cannot evaluate on an empty dataset")
    X, y = ds.as_arrays()
    return metrics_from_scores(predict_batch(model, X), y, threshold)


def mean_metrics(parts: Sequence[Metrics]) -> Metrics:
    """Per-metric mean; confusion counts are summed. AUC averages the folds
    where it was defined."""
    aucs = [m.auc for m in parts if m.auc is not None]
    return Metrics(
        auc=float(np.mean(aucs)) if aucs else None,
        acc=float(np.mean([m.acc for m in parts])),
        prec=float(np.mean([m.prec for m in parts])),
        rec=float(np.mean([m.rec for m in parts])),
        fmeasure=float(np.mean([m.fmeasure for m in parts])),
        gmean=float(np.mean([m.gmean for m in parts])),
        tp=sum(m.tp for m in parts),
        fp=sum(m.fp for m in parts),
        fn=sum(m.fn for m in parts),
        tn=sum(m.tn for m in parts),
    )


def _fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    permutation = rng_for(seed).permutation(n)
    sizes = [n // folds + (1 if k < n % folds else 0) for k in range(folds)]
    out = []
    start = 0
    for size in sizes:
        out.append(np.sort(permutation[start:start + size]))
        start += size
    return out


def cross_validate(
    ds: Dataset, folds: int = 10, trainer: Trainer | None = None, seed: int = 0
) -> Metrics:
    """Seeded random-selection k-fold; each training split is rebalanced to
    the 2:1 false:true ratio before training, test folds are left untouched."""
    if trainer is None:
        raise LearnError("cross_validate needs a trainer")
    n = len(ds.samples)
    if n < folds:
        raise LearnError(f"need at least {folds} samples for {folds}-fold CV, got {n}")
    assignments = _fold_indices(n, folds, seed)
    per_fold: list[Metrics] = []
    for k, test_idx in enumerate(assignments):
        test_set = set(int(i) for i in test_idx)
        train_idx = [i for i in range(n) if i not in test_set]
        train_ds = rebalance(ds.subset(train_idx), mix_seed(seed, k))
        model = trainer(train_ds)
        per_fold.append(evaluate_metrics(model, ds.subset(list(test_idx))))
    return mean_metrics(per_fold)


def permutation_importance_runs(
    ds: Dataset, trainer: Trainer, runs: int = 50, seed: int = 0
) -> np.ndarray:
    """Per-run accuracy drops, shape (runs, features), in feature order.

    Each run splits 70/30, trains, takes baseline accuracy on the held-out
    30%, then measures the accuracy drop per permuted voter column.
    """
    n = len(ds.samples)
    if n < 4:
        raise LearnError("importance needs at least 4 samples")
    num_features = len(ds.feature_names)
    drops = np.zeros((runs, num_features))
    for r in range(runs):
        rng = rng_for(mix_seed(seed, r))
        permutation = rng.permutation(n)
        cut = int(round(0.7 * n))
        train_idx = np.sort(permutation[:cut])
        test_idx = np.sort(permutation[cut:])
        model = trainer(ds.subset(list(train_idx)))
        X_test, y_test = ds.subset(list(test_idx)).as_arrays()
        baseline = metrics_from_scores(predict_batch(model, X_test), y_test).acc
        for j in range(num_features):
            shuffled = X_test.copy()
            shuffled[:, j] = shuffled[rng.permutation(X_test.shape[0]), j]
            permuted_acc = metrics_from_scores(predict_batch(model, shuffled), y_test).acc
            drops[r, j] = baseline - permuted_acc
    return drops


def permutation_importance(
    ds: Dataset, trainer: Trainer, runs: int = 50, seed: int = 0
) -> list[tuple[str, float]]:
    """Mean accuracy drop per voter, sorted descending."""
    drops = permutation_importance_runs(ds, trainer, runs, seed)
    means = drops.mean(axis=0)
    order = sorted(range(len(ds.feature_names)), key=lambda j: (-means[j], j))
    return [(ds.feature_names[j], float(means[j])) for j in order]


@dataclass(frozen=True)
class TrimResult:
    kept: tuple[str, ...]
    baseline_acc: float
    steps: tuple[tuple[int, float], ...]  # (voters kept, cv accuracy) per drop


def trim_voters_detailed(
    ds: Dataset,
    importance_ranking: Sequence[str] | Sequence[tuple[str, float]],
    max_acc_loss: float = 0.03,
    *,
    trainer: Trainer,
    folds: int = 10,
    seed: int = 0,
) -> TrimResult:
    """Drop voters from least important upward while cross-validated accuracy
    stays within ``max_acc_loss`` of the full model; stop at the first voter
    whose removal costs more."""
    ranked = [
        name if isinstance(name, str) else name[0] for name in importance_ranking
    ]
    if set(ranked) != set(ds.feature_names) or len(ranked) != len(ds.feature_names):
        raise DatasetError("importance ranking must cover every voter exactly once")
    baseline = cross_validate(ds, folds, trainer, seed).acc
    kept = list(ds.feature_names)
    steps: list[tuple[int, float]] = [(len(kept), baseline)]
    for name in reversed(ranked):  # least important first
        if len(kept) == 1:
            break
        candidate = [n for n in kept if n != name]
        acc = cross_validate(ds.project(candidate), folds, trainer, seed).acc
        steps.append((len(candidate), acc))
        if acc >= baseline - max_acc_loss:
            kept = candidate
        else:
            break
    return TrimResult(tuple(kept), baseline, tuple(steps))


def trim_voters(
    ds: Dataset,
    importance_ranking: Sequence[str] | Sequence[tuple[str, float]],
    max_acc_loss: float = 0.03,
    *,
    trainer: Trainer,
    folds: int = 10,
    seed: int = 0,
) -> tuple[str, ...]:
    """Smallest voter subset surviving the incremental trimming procedure."""
    return trim_voters_detailed(
        ds, importance_ranking, max_acc_loss, trainer=trainer, folds=folds, seed=seed
    ).kept


def run_dev_experiment(
    sessions: Sequence[tuple[SessionLog, Clustering]],
    mode: str,
    trainer: Trainer,
    seed: int = 0,
    folds: int = 10,
    window: float = PAIR_WINDOW_SECONDS,
) -> dict[str, Metrics]:
    """Per-developer, cross-developer, or pooled train/test regimes.

    intradev: 10-fold CV per developer. crossdev: train on one developer's
    rebalanced pairs, test on another's, for every ordered pair. combined:
    pooled CV over all developers.
    """
    if mode not in ("intradev", "crossdev", "combined"):
        raise LearnError(f"unknown experiment mode {mode!r}")
    by_dev: dict[str, list[Dataset]] = {}
    for log, truth in sessions:
        by_dev.setdefault(log.developer_id, []).append(build_pairs(log, truth, window))
    pooled = {dev: merge_datasets(parts) for dev, parts in by_dev.items()}
    developers = sorted(pooled)
    if mode == "crossdev" and len(developers) < 2:
        raise LearnError("crossdev needs at least two developers")
    results: dict[str, Metrics] = {}
    if mode == "intradev":
        for dev in developers:
            results[dev] = cross_validate(pooled[dev], folds, trainer, seed)
    elif mode == "crossdev":
        for train_dev in developers:
            model = trainer(rebalance(pooled[train_dev], seed))
            for test_dev in developers:
                if test_dev == train_dev:
                    continue
                results[f"{train_dev}->{test_dev}"] = evaluate_metrics(
                    model, pooled[test_dev]
                )
    else:
        results["combined"] = cross_validate(
            merge_datasets([pooled[d] for d in developers]), folds, trainer, seed
        )
    return results
