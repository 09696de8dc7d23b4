"""Agglomerative clustering of pairwise scores and the dendrogram-cut rule.

Each change starts as its own cluster; the most similar pair of clusters is
merged repeatedly (average linkage over the original pair scores), recording
the merge similarity per node. The similarity threshold is the midpoint of
the widest gap between merge levels that lie below the low-similarity bound,
and every merge below the threshold is undone to obtain the clusters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from untangler.events import ChangeEvent, Clustering, SessionLog
from untangler.learner.datasets import PAIR_WINDOW_SECONDS
from untangler.learner.models import Model, predict_batch
from untangler.voters import VOTER_NAMES, SessionContext


class ClusterError(ValueError):
    """Invalid input to scoring, agglomeration, or cutting."""


@dataclass(frozen=True)
class Leaf:
    change_id: str


@dataclass(frozen=True)
class Merge:
    left: "Dendrogram"
    right: "Dendrogram"
    similarity_level: float


Dendrogram = Union[Leaf, Merge]


@dataclass(frozen=True)
class CutConfig:
    low_similarity_bound: float = 0.25
    pair_window_seconds: float = PAIR_WINDOW_SECONDS

    def validate(self) -> None:
        if not 0.0 <= self.low_similarity_bound <= 1.0:
            raise ClusterError(
                f"low_similarity_bound must lie in [0,1], got {self.low_similarity_bound}"
            )


def leaves(node: Dendrogram) -> list[str]:
    """Leaf change ids, left to right."""
    out: list[str] = []
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Leaf):
            out.append(current.change_id)
        else:
            stack.append(current.right)
            stack.append(current.left)
    return out


def merge_levels(node: Dendrogram) -> list[float]:
    """Similarity levels of all internal nodes (preorder)."""
    out: list[float] = []
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Merge):
            out.append(current.similarity_level)
            stack.append(current.right)
            stack.append(current.left)
    return out


def score_matrix(
    changes: Sequence[ChangeEvent],
    log: SessionLog,
    model: Model,
    pair_window_seconds: float = PAIR_WINDOW_SECONDS,
) -> np.ndarray:
    """Symmetric same-cluster probabilities; pairs outside the window score 0."""
    ctx = SessionContext(log)
    n = len(changes)
    matrix = np.zeros((n, n))
    time_index = VOTER_NAMES.index("timeDifference")
    rows: list[np.ndarray] = []
    positions: list[tuple[int, int]] = []
    for i in range(n):
        for j in range(i + 1, n):
            vector = ctx.compute(changes[i], changes[j])
            full = vector.as_array()
            if full[time_index] >= pair_window_seconds:
                continue
            rows.append(vector.select(model.feature_names))
            positions.append((i, j))
    if rows:
        scores = predict_batch(model, np.array(rows))
        for (i, j), score in zip(positions, scores):
            matrix[i, j] = matrix[j, i] = float(score)
    return matrix


def agglomerate(matrix: np.ndarray, ids: Sequence[str]) -> Dendrogram:
    """Average-linkage merge tree; ties pick the pair whose two cluster
    minimum leaf ids sort lowest."""
    matrix = np.asarray(matrix, dtype=np.float64)
    n = len(ids)
    if n < 1:
        raise ClusterError("agglomerate needs at least one change")
    if matrix.shape != (n, n):
        raise ClusterError(f"matrix shape {matrix.shape} does not match {n} ids")
    if not np.array_equal(matrix, matrix.T):
        raise ClusterError("score matrix must be symmetric")
    off_diagonal = matrix[~np.eye(n, dtype=bool)]
    if off_diagonal.size and (off_diagonal.min() < 0.0 or off_diagonal.max() > 1.0):
        raise ClusterError("scores must lie in [0,1]")
    if len(set(ids)) != n:
        raise ClusterError("duplicate change ids")

    nodes: dict[int, Dendrogram] = {i: Leaf(ids[i]) for i in range(n)}
    sizes: dict[int, int] = {i: 1 for i in range(n)}
    min_leaf: dict[int, str] = {i: ids[i] for i in range(n)}
    sims = matrix.copy()
    active = list(range(n))

    while len(active) > 1:
        best_pair: tuple[int, int] | None = None
        best_sim = -1.0
        best_key: tuple[str, str] | None = None
        for a_pos in range(len(active)):
            for b_pos in range(a_pos + 1, len(active)):
                a, b = active[a_pos], active[b_pos]
                sim = sims[a, b]
                if sim < best_sim:
                    continue
                key = tuple(sorted((min_leaf[a], min_leaf[b])))
                if sim > best_sim or key < best_key:
                    best_sim = sim
                    best_key = key
                    best_pair = (a, b)
        a, b = best_pair  # type: ignore[misc]
        merged = Merge(nodes[a], nodes[b], float(best_sim))
        nodes[a] = merged
        min_leaf[a] = min(min_leaf[a], min_leaf[b])
        size_a, size_b = sizes[a], sizes[b]
        sizes[a] = size_a + size_b
        for other in active:
            if other in (a, b):
                continue
            average = (size_a * sims[a, other] + size_b * sims[b, other]) / (size_a + size_b)
            # guard against rounding above the operand range, which would
            # break monotone merge levels
            low = min(sims[a, other], sims[b, other])
            high = max(sims[a, other], sims[b, other])
            average = min(max(average, low), high)
            sims[a, other] = sims[other, a] = average
        active.remove(b)
        del nodes[b], sizes[b], min_leaf[b]
    return nodes[active[0]]


def cut_threshold(dendrogram: Dendrogram, cfg: CutConfig = CutConfig()) -> float:
    """Midpoint of the widest gap among merge levels below the bound.

    The gap enumeration runs over the bound itself, the candidate levels
    sorted descending, and a sentinel 0, so a lone low-level merge is cut
    away from the bound rather than kept. With no candidate level the
    threshold is 0 and a single cluster results. Equal widest gaps resolve
    to the one between the highest levels.
    """
    cfg.validate()
    candidates = sorted(
        (lvl for lvl in merge_levels(dendrogram) if lvl < cfg.low_similarity_bound),
        reverse=True,
    )
    if not candidates:
        return 0.0
    levels = [cfg.low_similarity_bound] + candidates + [0.0]
    best_index = 0
    best_gap = -1.0
    for i in range(len(levels) - 1):
        gap = levels[i] - levels[i + 1]
        if gap > best_gap:
            best_gap = gap
            best_index = i
    return (levels[best_index] + levels[best_index + 1]) / 2.0


def cut_clusters(dendrogram: Dendrogram, threshold: float) -> list[list[str]]:
    """Undo every merge below ``threshold``; the remaining subtrees are the
    clusters."""
    clusters: list[list[str]] = []
    stack = [dendrogram]
    while stack:
        node = stack.pop()
        if isinstance(node, Merge) and node.similarity_level < threshold:
            stack.append(node.right)
            stack.append(node.left)
        else:
            clusters.append(leaves(node))
    return clusters


def untangle(log: SessionLog, model: Model, cfg: CutConfig = CutConfig()) -> Clustering:
    """Score, agglomerate, cut; clusters are named T1, T2, ... by earliest
    member timestamp."""
    cfg.validate()
    changes = log.change_events()
    if not changes:
        raise ClusterError("session has no change events to untangle")
    matrix = score_matrix(changes, log, model, cfg.pair_window_seconds)
    dendrogram = agglomerate(matrix, [c.id for c in changes])
    threshold = cut_threshold(dendrogram, cfg)
    clusters = cut_clusters(dendrogram, threshold)
    entry_order = {c.id: i for i, c in enumerate(changes)}
    timestamp_of = {c.id: c.timestamp for c in changes}
    clusters.sort(key=lambda ids: min((timestamp_of[i], entry_order[i]) for i in ids))
    assignment = {
        change_id: f"T{k + 1}" for k, members in enumerate(clusters) for change_id in members
    }
    return Clustering(assignment)
