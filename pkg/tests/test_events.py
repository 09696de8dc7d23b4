"""Event, session, and clustering invariants."""

import numpy as np
import pytest

from helpers import class_event, log_of, method_event, suite_run
from untangler.events import Clustering, SessionLog, ValidationError, validate_session


def test_empty_log_is_valid():
    log = SessionLog(developer_id="dev1")
    assert validate_session(log) is log


def test_equal_timestamps_are_valid():
    log_of(method_event("a", 10.0), method_event("b", 10.0))


def test_timestamp_regression_reports_entry_index():
    log = log_of(method_event("a", 10.0), method_event("b", 9.0), validated=False)
    with pytest.raises(ValidationError, match="timestamp regression at entry 1"):
        validate_session(log)


def test_duplicate_id_rejected():
    log = log_of(method_event("a", 1.0), method_event("a", 2.0), validated=False)
    with pytest.raises(ValidationError, match="duplicate id"):
        validate_session(log)


def test_test_run_ids_share_the_namespace():
    log = log_of(method_event("x", 1.0), suite_run("x", 2.0), validated=False)
    with pytest.raises(ValidationError, match="duplicate id"):
        validate_session(log)


def test_method_event_needs_selector():
    bad = method_event("a", 1.0)
    object.__setattr__(bad, "selector", "")
    with pytest.raises(ValidationError, match="selector"):
        validate_session(log_of(bad, validated=False))


def test_method_added_must_not_carry_before_source():
    bad = method_event("a", 1.0, before="", after="f ^ 1")
    object.__setattr__(bad, "source_before", "f ^ 0")
    object.__setattr__(bad, "kind", "method-added")
    with pytest.raises(ValidationError, match="method-added"):
        validate_session(log_of(bad, validated=False))


def test_class_event_must_not_carry_selector_or_source():
    bad = class_event("a", 1.0, kind="class-added", ivars_after=("x",))
    object.__setattr__(bad, "selector", "oops")
    with pytest.raises(ValidationError, match="class event"):
        validate_session(log_of(bad, validated=False))


def test_unknown_kind_rejected():
    bad = method_event("a", 1.0)
    object.__setattr__(bad, "kind", "method-renamed")
    with pytest.raises(ValidationError, match="unknown change kind"):
        validate_session(log_of(bad, validated=False))


def test_non_finite_timestamp_rejected():
    with pytest.raises(ValidationError, match="timestamp"):
        validate_session(log_of(method_event("a", float("nan")), validated=False))


def test_validation_is_idempotent():
    log = log_of(method_event("a", 1.0), suite_run("t", 2.0), method_event("b", 3.0))
    assert validate_session(log) == validate_session(validate_session(log))


def test_mismatched_developer_rejected():
    log = SessionLog(developer_id="dev1",
                     entries=(method_event("a", 1.0, dev="dev2"),))
    with pytest.raises(ValidationError, match="developer"):
        validate_session(log)


def test_clustering_round_trips_through_cluster_view():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        assignment = {f"ch{i}": f"task{int(rng.integers(1, 6))}" for i in range(n)}
        clustering = Clustering(assignment)
        assert Clustering.from_clusters(clustering.clusters()).assignment == assignment


def test_from_clusters_rejects_empty_cluster():
    with pytest.raises(ValidationError, match="empty cluster"):
        Clustering.from_clusters({"A": set()})


def test_from_clusters_rejects_double_assignment():
    with pytest.raises(ValidationError, match="multiple clusters"):
        Clustering.from_clusters({"A": {"ch1"}, "B": {"ch1"}})


def test_check_covers_flags_missing_and_unknown_changes():
    log = log_of(method_event("a", 1.0), method_event("b", 2.0))
    with pytest.raises(ValidationError, match="without a cluster"):
        Clustering({"a": "T1"}).check_covers(log)
    with pytest.raises(ValidationError, match="unknown change ids"):
        Clustering({"a": "T1", "b": "T1", "zz": "T2"}).check_covers(log)
