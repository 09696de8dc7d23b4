"""Jaccard matching against the brute-force permutation oracle."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from helpers import clustering_of
from untangler.events import Clustering
from untangler.evaluator import EvalError, jaccard, match_clusterings, success_rate


def brute_force_best_matching(computed: Clustering, expected: Clustering):
    """Maximize the Jaccard sum over all permutations (exact arithmetic)."""
    computed_clusters = {k: set(v) for k, v in computed.clusters().items()}
    expected_clusters = {k: set(v) for k, v in expected.clusters().items()}
    rows = sorted(computed_clusters)
    cols = sorted(expected_clusters)
    while len(rows) < len(cols):
        rows.append(f"pad{len(rows)}")
        computed_clusters[rows[-1]] = set()
    while len(cols) < len(rows):
        cols.append(f"pad{len(cols)}")
        expected_clusters[cols[-1]] = set()

    def weight(r, c):
        a, b = computed_clusters[r], expected_clusters[c]
        union = len(a | b)
        return Fraction(len(a & b), union) if union else Fraction(0)

    best_total = None
    best_perm = None
    for perm in itertools.permutations(range(len(cols))):
        total = sum((weight(rows[i], cols[perm[i]]) for i in range(len(rows))),
                    start=Fraction(0))
        if best_total is None or total > best_total:
            best_total = total
            best_perm = perm
    return best_total, {rows[i]: cols[best_perm[i]] for i in range(len(rows))}


def random_clustering_pair(rng, max_clusters=6, max_changes=30):
    n = int(rng.integers(1, max_changes + 1))
    ids = [f"ch{i}" for i in range(n)]
    computed = Clustering({
        i: f"C{int(rng.integers(1, max_clusters + 1))}" for i in ids
    })
    expected = Clustering({
        i: f"E{int(rng.integers(1, max_clusters + 1))}" for i in ids
    })
    return computed, expected


class TestJaccard:
    def test_identical_sets(self):
        assert jaccard({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint_sets(self):
        assert jaccard({"a"}, {"b"}) == 0.0

    def test_half_overlap(self):
        assert jaccard({"ch5", "ch6"}, {"ch5"}) == 0.5

    def test_two_empty_sets_score_zero(self):
        assert jaccard(set(), set()) == 0.0


class TestMatchClusterings:
    def test_padded_matching_worked_example(self):
        computed = clustering_of(C1={"ch1", "ch2"}, C2={"ch5", "ch6"},
                                 C3={"ch3"}, C4={"ch4"})
        expected = clustering_of(E1={"ch3"}, E2={"ch1", "ch2"}, E3={"ch4"},
                                 E4={"ch5"}, E5={"ch6"})
        result = match_clusterings(computed, expected)
        assert result.total_jaccard == 3.5
        assert result.success_rate == pytest.approx(5 / 6, abs=1e-12)
        real_pairs = {p for p in result.pairs if not p[0].startswith("virtual")}
        assert real_pairs == {("C1", "E2"), ("C2", "E4"), ("C3", "E1"), ("C4", "E3")}
        assert result.per_change == {
            "ch1": True, "ch2": True, "ch3": True, "ch4": True,
            "ch5": True, "ch6": False,
        }

    def test_identical_clusterings_score_cluster_count(self):
        clustering = clustering_of(A={"x", "y"}, B={"z"}, C={"w", "v"})
        result = match_clusterings(clustering, clustering)
        assert result.total_jaccard == 3.0
        assert result.success_rate == 1.0
        assert all(result.per_change.values())

    def test_one_big_cluster_versus_singletons(self):
        n = 5
        ids = [f"ch{i}" for i in range(n)]
        computed = Clustering({i: "BIG" for i in ids})
        expected = Clustering({i: f"E{k}" for k, i in enumerate(ids)})
        result = match_clusterings(computed, expected)
        oracle_total, _ = brute_force_best_matching(computed, expected)
        assert Fraction(result.total_jaccard).limit_denominator() == oracle_total == Fraction(1, n)
        assert sum(result.per_change.values()) == 1
        assert result.success_rate == pytest.approx(1 / n)

    def test_completely_crossed_two_by_two(self):
        computed = clustering_of(C1={"a", "b"}, C2={"c", "d"})
        expected = clustering_of(E1={"a", "c"}, E2={"b", "d"})
        assert success_rate(computed, expected) == 0.5

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(47)
        for _ in range(60):
            computed, expected = random_clustering_pair(rng)
            result = match_clusterings(computed, expected)
            oracle_total, _ = brute_force_best_matching(computed, expected)
            assert result.total_jaccard == float(oracle_total)

    def test_success_rate_is_symmetric(self):
        rng = np.random.default_rng(53)
        for _ in range(40):
            computed, expected = random_clustering_pair(rng, max_clusters=4)
            assert success_rate(computed, expected) == pytest.approx(
                success_rate(expected, computed), abs=1e-12
            )

    def test_success_rate_one_iff_equal_partitions(self):
        rng = np.random.default_rng(59)
        for _ in range(40):
            computed, expected = random_clustering_pair(rng, max_clusters=3,
                                                        max_changes=12)
            rate = success_rate(computed, expected)
            same_partition = (
                sorted(map(sorted, computed.clusters().values()))
                == sorted(map(sorted, expected.clusters().values()))
            )
            assert (rate == 1.0) == same_partition

    def test_coverage_mismatch_rejected(self):
        with pytest.raises(EvalError, match="different change-id sets"):
            match_clusterings(Clustering({"a": "C"}), Clustering({"b": "E"}))

    def test_zero_changes_have_no_success_rate(self):
        with pytest.raises(EvalError, match="zero changes"):
            success_rate(Clustering({}), Clustering({}))

    def test_report_line_round_trips_as_json(self):
        import json

        computed = clustering_of(C1={"a"}, C2={"b"})
        expected = clustering_of(E1={"a", "b"})
        record = json.loads(match_clusterings(computed, expected).to_line())
        assert set(record) == {"successRate", "totalJaccard", "matching", "perChange"}
