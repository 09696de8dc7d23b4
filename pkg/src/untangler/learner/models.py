"""The three classifier families: logistic regression, naive Bayes, random forest.

All trainers are deterministic given the dataset order and an explicit seed.
Models serialize to a self-describing JSON document carrying the family tag,
feature names, and parameters (forest trees as nested node records).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from untangler.ingest import write_text_atomic
from untangler.learner.datasets import Dataset
from untangler.seeding import mix_seed, rng_for
from untangler.voters import VOTER_KINDS, VoterVector

NOMINAL_VALUES = (0.0, 1.0, 2.0)  # domain of the one nominal voter


class LearnError(ValueError):
    """Training or prediction failed a precondition."""


def feature_kinds(names: Sequence[str]) -> tuple[str, ...]:
    """Distribution family per feature; unknown names count as numeric."""
    return tuple(VOTER_KINDS.get(n, "numeric") for n in names)


def _check_two_classes(y: np.ndarray) -> None:
    if y.size == 0 or bool(y.all()) or not bool(y.any()):
        raise LearnError("training data must contain both classes")


def _as_matrix(model, features) -> np.ndarray:
    if isinstance(features, VoterVector):
        return features.select(model.feature_names)[None, :]
    array = np.asarray(features, dtype=np.float64)
    if array.ndim == 1:
        array = array[None, :]
    if array.shape[1] != len(model.feature_names):
        raise LearnError(
            f"feature arity mismatch: model expects {len(model.feature_names)}, "
            f"got {array.shape[1]}"
        )
    return array


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogisticConfig:
    rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4


@dataclass
class LogisticModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    bias: float
    means: np.ndarray
    stds: np.ndarray
    trained_on: tuple[str, ...] = ()


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def train_logistic(ds: Dataset, cfg: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Batch gradient descent on z-standardized numeric features, zero init."""
    X, y = ds.as_arrays()
    _check_two_classes(y)
    kinds = feature_kinds(ds.feature_names)
    numeric = np.array([k == "numeric" for k in kinds])
    means = np.where(numeric, X.mean(axis=0), 0.0)
    stds = np.where(numeric, X.std(axis=0), 1.0)
    stds = np.where(stds == 0.0, 1.0, stds)
    Z = (X - means) / stds
    target = y.astype(np.float64)
    weights = np.zeros(X.shape[1])
    bias = 0.0
    n = X.shape[0]
    for _ in range(cfg.epochs):
        p = _sigmoid(Z @ weights + bias)
        residual = p - target
        weights -= cfg.rate * (Z.T @ residual / n + cfg.l2 * weights)
        bias -= cfg.rate * float(residual.mean())
    return LogisticModel(
        feature_names=ds.feature_names,
        weights=weights,
        bias=bias,
        means=means,
        stds=stds,
        trained_on=ds.feature_names,
    )


# ---------------------------------------------------------------------------
# Naive Bayes
# ---------------------------------------------------------------------------

_VARIANCE_FLOOR = 1e-9


@dataclass
class NaiveBayesModel:
    feature_names: tuple[str, ...]
    kinds: tuple[str, ...]
    log_prior: np.ndarray  # [log P(false), log P(true)]
    features: list[dict] = field(default_factory=list)
    trained_on: tuple[str, ...] = ()


def train_naive_bayes(ds: Dataset) -> NaiveBayesModel:
    """Class-frequency priors; Laplace-smoothed Bernoulli/categorical features,
    per-class Gaussians (variance floored) for numeric ones."""
    X, y = ds.as_arrays()
    _check_two_classes(y)
    kinds = feature_kinds(ds.feature_names)
    class_rows = [X[~y], X[y]]
    counts = np.array([float((~y).sum()), float(y.sum())])
    log_prior = np.log(counts / y.size)
    features: list[dict] = []
    for j, kind in enumerate(kinds):
        if kind == "boolean":
            p_one = [
                (float((rows[:, j] >= 0.5).sum()) + 1.0) / (counts[c] + 2.0)
                for c, rows in enumerate(class_rows)
            ]
            features.append({"kind": "boolean", "pOne": p_one})
        elif kind == "nominal":
            probs = []
            for c, rows in enumerate(class_rows):
                col = rows[:, j]
                probs.append([
                    (float((col == v).sum()) + 1.0) / (counts[c] + len(NOMINAL_VALUES))
                    for v in NOMINAL_VALUES
                ])
            unseen = [1.0 / (counts[c] + len(NOMINAL_VALUES)) for c in (0, 1)]
            features.append({
                "kind": "nominal",
                "values": list(NOMINAL_VALUES),
                "probs": probs,
                "unseen": unseen,
            })
        else:
            mean = [float(rows[:, j].mean()) for rows in class_rows]
            var = [
                max(float(rows[:, j].var()), _VARIANCE_FLOOR) for rows in class_rows
            ]
            features.append({"kind": "numeric", "mean": mean, "var": var})
    return NaiveBayesModel(
        feature_names=ds.feature_names,
        kinds=kinds,
        log_prior=log_prior,
        features=features,
        trained_on=ds.feature_names,
    )


def _nb_log_likelihood(model: NaiveBayesModel, X: np.ndarray) -> np.ndarray:
    """(n, 2) joint log probability."""
    logp = np.tile(model.log_prior, (X.shape[0], 1))
    for j, params in enumerate(model.features):
        col = X[:, j]
        if params["kind"] == "boolean":
            ones = col >= 0.5
            for c in (0, 1):
                p = params["pOne"][c]
                logp[:, c] += np.where(ones, math.log(p), math.log(1.0 - p))
        elif params["kind"] == "nominal":
            values = params["values"]
            for c in (0, 1):
                probs = params["probs"][c]
                like = np.full(col.shape, params["unseen"][c])
                for v, p in zip(values, probs):
                    like = np.where(col == v, p, like)
                logp[:, c] += np.log(like)
        else:
            for c in (0, 1):
                mean, var = params["mean"][c], params["var"][c]
                logp[:, c] += -0.5 * (
                    math.log(2.0 * math.pi * var) + (col - mean) ** 2 / var
                )
    return logp


# ---------------------------------------------------------------------------
# Random forest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForestConfig:
    trees: int = 500
    vars_per_split: int | None = None  # defaults to min(5, num features)


@dataclass
class RandomForestModel:
    feature_names: tuple[str, ...]
    trees: list[dict]
    tree_seeds: list[int]
    vars_per_split: int
    trained_on: tuple[str, ...] = ()


def _gini(y: np.ndarray) -> float:
    p = float(y.mean())
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Lowest weighted Gini split; ties resolved toward the lowest feature
    index, then the lowest threshold.

    The threshold is the largest value routed left (predicate ``x <= t``), an
    order statistic of the column, so splits are invariant under strictly
    monotone feature transforms.
    """
    n = y.size
    total_true = int(y.sum())
    best: tuple[float, int, float] | None = None
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y[order]
        boundaries = np.nonzero(sorted_col[:-1] < sorted_col[1:])[0]
        if boundaries.size == 0:
            continue
        left_n = (boundaries + 1).astype(np.float64)
        left_true = np.cumsum(sorted_y)[boundaries].astype(np.float64)
        right_n = n - left_n
        right_true = total_true - left_true
        pl = left_true / left_n
        pr = right_true / right_n
        weighted = (
            left_n * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl))
            + right_n * (1.0 - pr * pr - (1.0 - pr) * (1.0 - pr))
        ) / n
        k = int(np.argmin(weighted))
        candidate = float(weighted[k])
        if best is None or candidate < best[0]:
            best = (candidate, int(f), float(sorted_col[boundaries[k]]))
    return best


def _build_tree(X: np.ndarray, y: np.ndarray, rng, vars_per_split: int) -> dict:
    """Grow until pure or no improving split; leaves store the true fraction."""
    root: dict = {}
    stack: list[tuple[dict, np.ndarray]] = [(root, np.arange(y.size))]
    while stack:
        node, idx = stack.pop()
        sub_y = y[idx]
        p = float(sub_y.mean())
        if p == 0.0 or p == 1.0:
            node["p"] = p
            continue
        features = np.sort(rng.choice(X.shape[1], size=vars_per_split, replace=False))
        best = _best_split(X[idx], sub_y, features)
        if best is None or best[0] >= _gini(sub_y):
            node["p"] = p
            continue
        _, feature, threshold = best
        mask = X[idx, feature] <= threshold
        left: dict = {}
        right: dict = {}
        node["feature"] = feature
        node["threshold"] = threshold
        node["left"] = left
        node["right"] = right
        stack.append((right, idx[~mask]))
        stack.append((left, idx[mask]))
    return root


def train_random_forest(
    ds: Dataset, cfg: ForestConfig = ForestConfig(), seed: int = 0
) -> RandomForestModel:
    """Seeded bootstrap per tree; per-node feature sampling without replacement."""
    X, y = ds.as_arrays()
    _check_two_classes(y)
    n, num_features = X.shape
    vars_per_split = cfg.vars_per_split or min(5, num_features)
    if not 1 <= vars_per_split <= num_features:
        raise LearnError(f"vars_per_split must lie in 1..{num_features}")
    trees: list[dict] = []
    tree_seeds: list[int] = []
    for index in range(cfg.trees):
        tree_seed = mix_seed(seed, index)
        tree_seeds.append(tree_seed)
        rng = rng_for(tree_seed)
        sample = rng.integers(0, n, size=n)
        trees.append(_build_tree(X[sample], y[sample], rng, vars_per_split))
    return RandomForestModel(
        feature_names=ds.feature_names,
        trees=trees,
        tree_seeds=tree_seeds,
        vars_per_split=vars_per_split,
        trained_on=ds.feature_names,
    )


def _tree_scores(tree: dict, X: np.ndarray, out: np.ndarray) -> None:
    stack: list[tuple[dict, np.ndarray]] = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        p = node.get("p")
        if p is not None:
            out[idx] = p
            continue
        mask = X[idx, node["feature"]] <= node["threshold"]
        stack.append((node["left"], idx[mask]))
        stack.append((node["right"], idx[~mask]))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

Model = Union[LogisticModel, NaiveBayesModel, RandomForestModel]
Trainer = Callable[[Dataset], Model]


def predict_batch(model: Model, features) -> np.ndarray:
    """Same-cluster probability for each row of ``features``."""
    X = _as_matrix(model, features)
    if isinstance(model, LogisticModel):
        Z = (X - model.means) / model.stds
        return _sigmoid(Z @ model.weights + model.bias)
    if isinstance(model, NaiveBayesModel):
        logp = _nb_log_likelihood(model, X)
        logp -= logp.max(axis=1, keepdims=True)
        joint = np.exp(logp)
        return joint[:, 1] / joint.sum(axis=1)
    if isinstance(model, RandomForestModel):
        total = np.zeros(X.shape[0])
        scratch = np.empty(X.shape[0])
        for tree in model.trees:
            _tree_scores(tree, X, scratch)
            total += scratch
        return total / len(model.trees)
    raise LearnError(f"unknown model type {type(model).__name__}")


def predict(model: Model, features) -> float:
    """Probability that the two changes of a pair belong to the same cluster."""
    return float(predict_batch(model, features)[0])


def make_trainer(
    family: str,
    seed: int = 0,
    forest: ForestConfig = ForestConfig(),
    logistic: LogisticConfig = LogisticConfig(),
) -> Trainer:
    """A Dataset -> Model callable for a classifier family name."""
    if family in ("forest", "ranforest"):
        return lambda ds: train_random_forest(ds, forest, seed)
    if family in ("logreg", "binlogreg", "logistic"):
        return lambda ds: train_logistic(ds, logistic)
    if family in ("nb", "naivebayes"):
        return lambda ds: train_naive_bayes(ds)
    raise LearnError(f"unknown classifier family {family!r}")


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def model_to_document(model: Model) -> dict:
    if isinstance(model, LogisticModel):
        params = {
            "weights": [float(w) for w in model.weights],
            "bias": float(model.bias),
            "means": [float(m) for m in model.means],
            "stds": [float(s) for s in model.stds],
        }
        family = "logistic"
    elif isinstance(model, NaiveBayesModel):
        params = {
            "kinds": list(model.kinds),
            "logPrior": [float(v) for v in model.log_prior],
            "features": model.features,
        }
        family = "naivebayes"
    elif isinstance(model, RandomForestModel):
        params = {
            "trees": model.trees,
            "treeSeeds": model.tree_seeds,
            "varsPerSplit": model.vars_per_split,
        }
        family = "randomforest"
    else:
        raise LearnError(f"unknown model type {type(model).__name__}")
    return {
        "family": family,
        "featureNames": list(model.feature_names),
        "trainedOnVoterSubset": list(model.trained_on),
        "params": params,
    }


def model_from_document(doc: dict) -> Model:
    family = doc.get("family")
    names = tuple(doc["featureNames"])
    trained_on = tuple(doc.get("trainedOnVoterSubset", names))
    params = doc["params"]
    if family == "logistic":
        return LogisticModel(
            feature_names=names,
            weights=np.array(params["weights"], dtype=np.float64),
            bias=float(params["bias"]),
            means=np.array(params["means"], dtype=np.float64),
            stds=np.array(params["stds"], dtype=np.float64),
            trained_on=trained_on,
        )
    if family == "naivebayes":
        return NaiveBayesModel(
            feature_names=names,
            kinds=tuple(params["kinds"]),
            log_prior=np.array(params["logPrior"], dtype=np.float64),
            features=list(params["features"]),
            trained_on=trained_on,
        )
    if family == "randomforest":
        return RandomForestModel(
            feature_names=names,
            trees=list(params["trees"]),
            tree_seeds=[int(s) for s in params["treeSeeds"]],
            vars_per_split=int(params["varsPerSplit"]),
            trained_on=trained_on,
        )
    raise LearnError(f"unknown model family {family!r}")


def write_model(model: Model, path: str | Path) -> None:
    write_text_atomic(path, json.dumps(model_to_document(model)) + "\n")


def read_model(path: str | Path) -> Model:
    return model_from_document(json.loads(Path(path).read_text(encoding="utf-8")))
