"""Domain types for fine-grained IDE events, sessions, and clusterings.

All values are immutable after construction and safe to share across
concurrent readers. Entry order within a session is the authoritative total
order; timestamp ties between entries are legal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

CLASS_ADDED = "class-added"
CLASS_MODIFIED = "class-modified"
CLASS_REMOVED = "class-removed"
METHOD_ADDED = "method-added"
METHOD_MODIFIED = "method-modified"
METHOD_REMOVED = "method-removed"

CLASS_KINDS = frozenset({CLASS_ADDED, CLASS_MODIFIED, CLASS_REMOVED})
METHOD_KINDS = frozenset({METHOD_ADDED, METHOD_MODIFIED, METHOD_REMOVED})
CHANGE_KINDS = CLASS_KINDS | METHOD_KINDS

TEST_OUTCOMES = frozenset({"pass", "fail", "error"})


class ValidationError(ValueError):
    """A session, event, or clustering violates a structural invariant."""


@dataclass(frozen=True)
class ChangeEvent:
    """One saved modification to a class or method, recorded by the IDE."""

    id: str
    developer_id: str
    timestamp: float
    kind: str
    package_name: str
    class_name: str
    selector: str = ""
    instance_vars_before: tuple[str, ...] = ()
    instance_vars_after: tuple[str, ...] = ()
    source_before: str = ""
    source_after: str = ""

    @property
    def is_method_event(self) -> bool:
        return self.kind in METHOD_KINDS

    @property
    def is_class_event(self) -> bool:
        return self.kind in CLASS_KINDS

    def check(self) -> None:
        if self.kind not in CHANGE_KINDS:
            raise ValidationError(f"unknown change kind {self.kind!r}")
        if not self.id:
            raise ValidationError("change event with empty id")
        if not math.isfinite(self.timestamp):
            raise ValidationError(f"non-finite timestamp on {self.id}")
        if self.is_method_event:
            if not self.selector:
                raise ValidationError(f"method event {self.id} has empty selector")
            if self.instance_vars_before or self.instance_vars_after:
                raise ValidationError(
                    f"method event {self.id} carries instance variable lists"
                )
            if self.kind == METHOD_ADDED and (self.source_before or not self.source_after):
                raise ValidationError(
                    f"method-added {self.id} must have empty before and non-empty after source"
                )
            if self.kind == METHOD_REMOVED and (not self.source_before or self.source_after):
                raise ValidationError(
                    f"method-removed {self.id} must have non-empty before and empty after source"
                )
            if self.kind == METHOD_MODIFIED and not (self.source_before and self.source_after):
                raise ValidationError(
                    f"method-modified {self.id} must have both sources"
                )
        else:
            if self.selector:
                raise ValidationError(f"class event {self.id} has non-empty selector")
            if self.source_before or self.source_after:
                raise ValidationError(f"class event {self.id} carries method source")


@dataclass(frozen=True)
class TestRunEvent:
    """A unit-test suite execution recorded between code changes."""

    id: str
    timestamp: float
    test_suite_id: str
    outcome: str

    def check(self) -> None:
        if not self.id:
            raise ValidationError("test-run event with empty id")
        if not math.isfinite(self.timestamp):
            raise ValidationError(f"non-finite timestamp on {self.id}")
        if self.outcome not in TEST_OUTCOMES:
            raise ValidationError(f"unknown test outcome {self.outcome!r} on {self.id}")


SessionEntry = Union[ChangeEvent, TestRunEvent]


@dataclass(frozen=True)
class SessionLog:
    """The ordered event stream of one developer."""

    developer_id: str
    entries: tuple[SessionEntry, ...] = ()

    def change_events(self) -> list[ChangeEvent]:
        return [e for e in self.entries if isinstance(e, ChangeEvent)]

    def change_ids(self) -> set[str]:
        return {e.id for e in self.entries if isinstance(e, ChangeEvent)}

    def __iter__(self) -> Iterator[SessionEntry]:
        return iter(self.entries)


def validate_session(log: SessionLog) -> SessionLog:
    """Return ``log`` unchanged if every invariant holds.

    Reports the first violation (duplicate id, timestamp regression,
    malformed event shape) together with its entry index.
    """
    seen: set[str] = set()
    previous_ts: float | None = None
    for index, entry in enumerate(log.entries):
        try:
            entry.check()
        except ValidationError as exc:
            raise ValidationError(f"entry {index}: {exc}") from None
        if entry.id in seen:
            raise ValidationError(f"duplicate id {entry.id!r} at entry {index}")
        seen.add(entry.id)
        if previous_ts is not None and entry.timestamp < previous_ts:
            raise ValidationError(f"timestamp regression at entry {index}")
        previous_ts = entry.timestamp
        if isinstance(entry, ChangeEvent) and entry.developer_id != log.developer_id:
            raise ValidationError(
                f"entry {index}: developer {entry.developer_id!r} does not match "
                f"session developer {log.developer_id!r}"
            )
    return log


@dataclass(frozen=True)
class Clustering:
    """A partition of a session's change events into task clusters."""

    assignment: Mapping[str, str] = field(default_factory=dict)

    def clusters(self) -> dict[str, set[str]]:
        """Cluster id -> set of change ids (derived view)."""
        out: dict[str, set[str]] = {}
        for change_id, cluster_id in self.assignment.items():
            out.setdefault(cluster_id, set()).add(change_id)
        return out

    @classmethod
    def from_clusters(cls, clusters: Mapping[str, set[str]]) -> "Clustering":
        assignment: dict[str, str] = {}
        for cluster_id, members in clusters.items():
            if not members:
                raise ValidationError(f"empty cluster {cluster_id!r}")
            for change_id in members:
                if change_id in assignment:
                    raise ValidationError(
                        f"change {change_id!r} assigned to multiple clusters"
                    )
                assignment[change_id] = cluster_id
        return cls(assignment)

    def check_covers(self, log: SessionLog) -> None:
        """Every change event of ``log`` appears exactly once, and nothing else."""
        session_ids = log.change_ids()
        assigned = set(self.assignment)
        missing = session_ids - assigned
        if missing:
            raise ValidationError(f"changes without a cluster: {sorted(missing)[:5]}")
        unknown = assigned - session_ids
        if unknown:
            raise ValidationError(f"unknown change ids in clustering: {sorted(unknown)[:5]}")

    def __len__(self) -> int:
        return len(self.assignment)
