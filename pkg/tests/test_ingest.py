"""Session/clustering files and the synthetic generator."""

import numpy as np
import pytest

from helpers import log_of, method_event, suite_run
from untangler.events import Clustering, validate_session
from untangler.ingest import (
    IngestError,
    SynthConfig,
    clustering_from_text,
    clustering_to_text,
    generate_synthetic_session,
    read_clustering,
    read_session,
    session_from_text,
    session_to_text,
    write_clustering,
    write_session,
)
from untangler.voters import SessionContext


class TestSessionFiles:
    def test_round_trip_preserves_the_log(self, tmp_path):
        log, _ = generate_synthetic_session(SynthConfig(seed=4, test_run_prob=0.4))
        path = tmp_path / "session.jsonl"
        write_session(log, path)
        assert read_session(path) == log

    def test_empty_file_is_an_empty_session(self):
        log = session_from_text("")
        assert log.entries == ()

    def test_records_stay_in_file_order(self):
        log = log_of(
            method_event("a", 1.0), suite_run("t", 2.0),
            method_event("b", 3.0, selector="g", after="g ^ 2"),
        )
        parsed = session_from_text(session_to_text(log))
        assert [e.id for e in parsed.entries] == ["a", "t", "b"]

    def test_missing_field_names_line_one(self):
        record = ('{"type": "change", "id": "x", "developerId": "dev1", '
                  '"kind": "method-added", "packageName": "P", "className": "C", '
                  '"selector": "f", "sourceAfter": "f ^ 1"}')
        with pytest.raises(IngestError, match="line 1: missing field 'timestamp'"):
            session_from_text(record + "\n")

    def test_invalid_json_names_its_line(self):
        good = session_to_text(log_of(method_event("a", 1.0)))
        with pytest.raises(IngestError, match="line 2"):
            session_from_text(good + "{broken\n")

    def test_unknown_record_type_rejected(self):
        with pytest.raises(IngestError, match="unknown record type"):
            session_from_text('{"type": "refactor", "id": "x", "timestamp": 1}\n')

    def test_validation_failures_propagate(self):
        text = session_to_text(
            log_of(method_event("a", 5.0), method_event("b", 1.0), validated=False)
        )
        with pytest.raises(IngestError, match="timestamp regression"):
            session_from_text(text)

    def test_mixed_developers_rejected(self):
        a = method_event("a", 1.0, dev="dev1")
        b = method_event("b", 2.0, dev="dev2", selector="g", after="g ^ 2")
        text = session_to_text(log_of(a, validated=False)) + session_to_text(
            log_of(b, dev="dev2", validated=False)
        )
        with pytest.raises(IngestError, match="developer"):
            session_from_text(text)


class TestClusteringFiles:
    def test_round_trip_is_identity_on_the_assignment(self, tmp_path):
        clustering = Clustering({"ch1": "A", "ch2": "A", "ch3": "B"})
        path = tmp_path / "c.jsonl"
        write_clustering(clustering, path)
        assert read_clustering(path).assignment == clustering.assignment

    def test_rewrite_is_bit_identical(self, tmp_path):
        clustering = Clustering({"ch1": "A", "ch2": "A"})
        first = tmp_path / "one.jsonl"
        second = tmp_path / "two.jsonl"
        write_clustering(clustering, first)
        write_clustering(read_clustering(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_empty_clustering_round_trips(self):
        assert clustering_from_text(clustering_to_text(Clustering({}))).assignment == {}

    def test_unknown_change_id_against_session(self):
        log = log_of(method_event("ch1", 1.0))
        text = clustering_to_text(Clustering({"ch1": "A", "ch9": "A"}))
        with pytest.raises(IngestError, match="unknown change ids"):
            clustering_from_text(text, session=log)

    def test_duplicate_change_id_rejected(self):
        text = '{"changeId": "ch1", "clusterId": "A"}\n' * 2
        with pytest.raises(IngestError, match="duplicate changeId"):
            clustering_from_text(text)


class TestGenerator:
    def test_single_task_yields_single_cluster(self):
        _, truth = generate_synthetic_session(SynthConfig(num_tasks=1, seed=1))
        assert len(truth.clusters()) == 1

    def test_same_seed_is_deterministic(self):
        cfg = SynthConfig(num_tasks=3, seed=42, test_run_prob=0.3)
        assert generate_synthetic_session(cfg) == generate_synthetic_session(cfg)

    def test_different_seed_differs(self):
        a, _ = generate_synthetic_session(SynthConfig(seed=1))
        b, _ = generate_synthetic_session(SynthConfig(seed=2))
        assert a != b

    def test_change_counts_follow_the_config(self):
        cfg = SynthConfig(num_tasks=3, changes_per_task=(10, 10), seed=5)
        log, truth = generate_synthetic_session(cfg)
        assert len(log.change_ids()) == 30
        sizes = sorted(len(v) for v in truth.clusters().values())
        assert sizes == [10, 10, 10]

    def test_generated_logs_validate_and_truth_covers(self):
        for seed in range(5):
            cfg = SynthConfig(num_tasks=4, changes_per_task=(3, 9),
                              interleave_prob=0.5, test_run_prob=0.5, seed=seed)
            log, truth = generate_synthetic_session(cfg)
            validate_session(log)
            truth.check_covers(log)

    def test_probability_bounds_checked(self):
        with pytest.raises(IngestError, match="class_overlap"):
            generate_synthetic_session(SynthConfig(class_overlap=1.5))
        with pytest.raises(IngestError, match="changes_per_task"):
            generate_synthetic_session(SynthConfig(changes_per_task=(5, 2)))
        with pytest.raises(IngestError, match="num_tasks"):
            generate_synthetic_session(SynthConfig(num_tasks=0))

    def test_disjoint_pools_and_contiguous_tasks_separate_perfectly(self):
        cfg = SynthConfig(
            num_tasks=3, changes_per_task=(10, 14), class_pool_per_task=3,
            class_overlap=0.0, interleave_prob=0.0,
            intra_task_gap_seconds=(1.0, 5.0),
            inter_task_gap_seconds=(2000.0, 4000.0),
            test_run_prob=0.2, seed=99,
        )
        log, truth = generate_synthetic_session(cfg)
        ctx = SessionContext(log)
        changes = log.change_events()
        max_intra = 0.0
        min_cross = float("inf")
        for i in range(len(changes)):
            for j in range(i + 1, len(changes)):
                a, b = changes[i], changes[j]
                vector = ctx.compute(a, b)
                same_task = truth.assignment[a.id] == truth.assignment[b.id]
                if same_task:
                    max_intra = max(max_intra, vector.time_difference)
                else:
                    assert vector.same_class == 0.0
                    min_cross = min(min_cross, vector.time_difference)
        assert min_cross > max_intra

    def test_all_method_sources_parse(self):
        from untangler.code_facts import extract_facts

        log, _ = generate_synthetic_session(SynthConfig(num_tasks=2, seed=13))
        for event in log.change_events():
            for source in (event.source_before, event.source_after):
                if source:
                    extract_facts(source)
