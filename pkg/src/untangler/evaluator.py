"""Score a computed clustering against an expected one.

The smaller side is padded with virtual empty clusters, the Jaccard matrix is
built over all cluster pairs, and a maximum-weight perfect matching picks the
cluster correspondence. A change is successfully clustered when its computed
and expected clusters are matched to each other.

Matching runs on exact rational arithmetic so the optimum is bit-reproducible
and identical to brute-force permutation search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from untangler.events import Clustering


class EvalError(ValueError):
    """Clusterings cannot be compared."""


def jaccard(a: set[str] | frozenset[str], b: set[str] | frozenset[str]) -> float:
    """|a ∩ b| / |a ∪ b|; two empty sets score 0 (virtual-cluster convention)."""
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def _jaccard_exact(a: set[str], b: set[str]) -> Fraction:
    union = len(a | b)
    if union == 0:
        return Fraction(0)
    return Fraction(len(a & b), union)


@dataclass(frozen=True)
class MatchResult:
    pairs: frozenset[tuple[str, str]]  # (computed cluster, expected cluster)
    total_jaccard: float
    success_rate: float
    per_change: Mapping[str, bool]

    def to_record(self) -> dict:
        return {
            "successRate": self.success_rate,
            "totalJaccard": self.total_jaccard,
            "matching": [list(pair) for pair in sorted(self.pairs)],
            "perChange": {k: self.per_change[k] for k in sorted(self.per_change)},
        }

    def to_line(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


def _min_cost_assignment(cost: list[list[Fraction]]) -> list[int]:
    """Exact Hungarian method (potentials form) for a square cost matrix.

    Returns column index assigned to each row.
    """
    n = len(cost)
    if n == 0:
        return []
    infinity = Fraction(1_000_000_000)
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (n + 1)
    matched_row = [0] * (n + 1)  # matched_row[j] = row occupying column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        matched_row[0] = i
        j0 = 0
        min_reduced = [infinity] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = matched_row[j0]
            delta = infinity
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                current = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if current < min_reduced[j]:
                    min_reduced[j] = current
                    way[j] = j0
                if min_reduced[j] < delta:
                    delta = min_reduced[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[matched_row[j]] += delta
                    v[j] -= delta
                else:
                    min_reduced[j] -= delta
            j0 = j1
            if matched_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            matched_row[j0] = matched_row[j1]
            j0 = j1
    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[matched_row[j] - 1] = j - 1
    return assignment


def _virtual_ids(count: int, taken: set[str]) -> list[str]:
    out: list[str] = []
    k = 1
    while len(out) < count:
        candidate = f"virtual{k}"
        if candidate not in taken:
            out.append(candidate)
        k += 1
    return out


def match_clusterings(computed: Clustering, expected: Clustering) -> MatchResult:
    """Maximum-Jaccard perfect matching after padding with virtual clusters."""
    if set(computed.assignment) != set(expected.assignment):
        raise EvalError("clusterings cover different change-id sets")

    computed_clusters = {k: set(v) for k, v in computed.clusters().items()}
    expected_clusters = {k: set(v) for k, v in expected.clusters().items()}
    rows = sorted(computed_clusters)
    cols = sorted(expected_clusters)
    if len(rows) < len(cols):
        for vid in _virtual_ids(len(cols) - len(rows), set(rows)):
            rows.append(vid)
            computed_clusters[vid] = set()
    elif len(cols) < len(rows):
        for vid in _virtual_ids(len(rows) - len(cols), set(cols)):
            cols.append(vid)
            expected_clusters[vid] = set()

    weights = [
        [_jaccard_exact(computed_clusters[r], expected_clusters[c]) for c in cols]
        for r in rows
    ]
    assignment = _min_cost_assignment([[-w for w in row] for row in weights])
    total = sum(
        (weights[i][assignment[i]] for i in range(len(rows))), start=Fraction(0)
    )
    matched_expected = {rows[i]: cols[assignment[i]] for i in range(len(rows))}
    per_change = {
        change_id: matched_expected[computed.assignment[change_id]]
        == expected.assignment[change_id]
        for change_id in computed.assignment
    }
    successes = sum(per_change.values())
    return MatchResult(
        pairs=frozenset(matched_expected.items()),
        total_jaccard=float(total),
        success_rate=successes / len(per_change) if per_change else 0.0,
        per_change=per_change,
    )


def success_rate(computed: Clustering, expected: Clustering) -> float:
    """Fraction of changes whose computed and expected clusters are matched."""
    if not computed.assignment:
        raise EvalError("success rate is undefined for zero changes")
    return match_clusterings(computed, expected).success_rate
