"""Read/write session logs and clusterings; generate labeled synthetic sessions.

Files are line-oriented UTF-8: one self-describing JSON record per line.
Session records carry ``type`` ("change" or "testRun") and the event fields;
clustering records are ``{"changeId": ..., "clusterId": ...}``. Timestamps are
serialized as decimal seconds.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from untangler.events import (
    CLASS_ADDED,
    CLASS_MODIFIED,
    METHOD_ADDED,
    METHOD_MODIFIED,
    METHOD_REMOVED,
    ChangeEvent,
    Clustering,
    SessionEntry,
    SessionLog,
    TestRunEvent,
    ValidationError,
    validate_session,
)
from untangler.seeding import rng_for


class IngestError(ValueError):
    """A file could not be read or written as session/clustering data."""


# ---------------------------------------------------------------------------
# Atomic file writing
# ---------------------------------------------------------------------------

def write_text_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory; rename on success."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_bytes_atomic(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


# ---------------------------------------------------------------------------
# Session / clustering serialization
# ---------------------------------------------------------------------------

def _entry_record(entry: SessionEntry) -> dict:
    if isinstance(entry, ChangeEvent):
        return {
            "type": "change",
            "id": entry.id,
            "developerId": entry.developer_id,
            "timestamp": entry.timestamp,
            "kind": entry.kind,
            "packageName": entry.package_name,
            "className": entry.class_name,
            "selector": entry.selector,
            "instanceVarsBefore": list(entry.instance_vars_before),
            "instanceVarsAfter": list(entry.instance_vars_after),
            "sourceBefore": entry.source_before,
            "sourceAfter": entry.source_after,
        }
    return {
        "type": "testRun",
        "id": entry.id,
        "timestamp": entry.timestamp,
        "testSuiteId": entry.test_suite_id,
        "outcome": entry.outcome,
    }


def session_to_text(log: SessionLog) -> str:
    lines = [json.dumps(_entry_record(e), ensure_ascii=False) for e in log.entries]
    return "".join(line + "\n" for line in lines)


def write_session(log: SessionLog, path: str | Path) -> None:
    write_text_atomic(path, session_to_text(log))


def _field(record: dict, name: str, line_number: int):
    if name not in record:
        raise IngestError(f"line {line_number}: missing field {name!r}")
    return record[name]


def _entry_from_record(record: dict, line_number: int) -> SessionEntry:
    entry_type = _field(record, "type", line_number)
    if entry_type == "change":
        return ChangeEvent(
            id=str(_field(record, "id", line_number)),
            developer_id=str(_field(record, "developerId", line_number)),
            timestamp=float(_field(record, "timestamp", line_number)),
            kind=str(_field(record, "kind", line_number)),
            package_name=str(_field(record, "packageName", line_number)),
            class_name=str(_field(record, "className", line_number)),
            selector=str(record.get("selector", "")),
            instance_vars_before=tuple(record.get("instanceVarsBefore", ())),
            instance_vars_after=tuple(record.get("instanceVarsAfter", ())),
            source_before=str(record.get("sourceBefore", "")),
            source_after=str(record.get("sourceAfter", "")),
        )
    if entry_type == "testRun":
        return TestRunEvent(
            id=str(_field(record, "id", line_number)),
            timestamp=float(_field(record, "timestamp", line_number)),
            test_suite_id=str(_field(record, "testSuiteId", line_number)),
            outcome=str(_field(record, "outcome", line_number)),
        )
    raise IngestError(f"line {line_number}: unknown record type {entry_type!r}")


def session_from_text(text: str) -> SessionLog:
    entries: list[SessionEntry] = []
    developer_id: str | None = None
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {line_number}: invalid record: {exc.msg}") from None
        if not isinstance(record, dict):
            raise IngestError(f"line {line_number}: record is not an object")
        entry = _entry_from_record(record, line_number)
        if isinstance(entry, ChangeEvent):
            if developer_id is None:
                developer_id = entry.developer_id
            elif entry.developer_id != developer_id:
                raise IngestError(
                    f"line {line_number}: developer {entry.developer_id!r} differs "
                    f"from session developer {developer_id!r}"
                )
        entries.append(entry)
    log = SessionLog(developer_id=developer_id or "", entries=tuple(entries))
    try:
        return validate_session(log)
    except ValidationError as exc:
        raise IngestError(str(exc)) from None


def read_session(path: str | Path) -> SessionLog:
    """Parse and validate a session file, preserving file order."""
    return session_from_text(Path(path).read_text(encoding="utf-8"))


def clustering_to_text(clustering: Clustering) -> str:
    lines = [
        json.dumps({"changeId": change_id, "clusterId": cluster_id}, ensure_ascii=False)
        for change_id, cluster_id in sorted(clustering.assignment.items())
    ]
    return "".join(line + "\n" for line in lines)


def write_clustering(clustering: Clustering, path: str | Path) -> None:
    write_text_atomic(path, clustering_to_text(clustering))


def clustering_from_text(text: str, session: SessionLog | None = None) -> Clustering:
    assignment: dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {line_number}: invalid record: {exc.msg}") from None
        change_id = str(_field(record, "changeId", line_number))
        cluster_id = str(_field(record, "clusterId", line_number))
        if change_id in assignment:
            raise IngestError(f"line {line_number}: duplicate changeId {change_id!r}")
        assignment[change_id] = cluster_id
    clustering = Clustering(assignment)
    if session is not None:
        try:
            clustering.check_covers(session)
        except ValidationError as exc:
            raise IngestError(str(exc)) from None
    return clustering


def read_clustering(path: str | Path, session: SessionLog | None = None) -> Clustering:
    """Read a clustering; with ``session`` given, require exact coverage."""
    return clustering_from_text(Path(path).read_text(encoding="utf-8"), session)


# ---------------------------------------------------------------------------
# Synthetic sessions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Shape of a generated session; all randomness flows from ``seed``."""

    num_tasks: int = 3
    changes_per_task: tuple[int, int] = (8, 15)
    class_pool_per_task: int = 3
    class_overlap: float = 0.0
    interleave_prob: float = 0.1
    intra_task_gap_seconds: tuple[float, float] = (5.0, 90.0)
    inter_task_gap_seconds: tuple[float, float] = (1800.0, 7200.0)
    test_run_prob: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.num_tasks < 1:
            raise IngestError("num_tasks must be >= 1")
        if self.class_pool_per_task < 1:
            raise IngestError("class_pool_per_task must be >= 1")
        lo, hi = self.changes_per_task
        if lo < 1 or hi < lo:
            raise IngestError(f"empty changes_per_task range {self.changes_per_task}")
        for name in ("class_overlap", "interleave_prob", "test_run_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise IngestError(f"{name} must lie in [0,1], got {value}")
        for name in ("intra_task_gap_seconds", "inter_task_gap_seconds"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo <= hi) or not math.isfinite(hi):
                raise IngestError(f"invalid {name} range ({lo}, {hi})")


_BASE_TIMESTAMP = 1_600_000_000.0
_CLASS_EVENT_PROB = 0.12
_COSMETIC_PROB = 0.15
_METHOD_REMOVE_PROB = 0.04
_OUTCOMES = ("pass", "fail", "error")
_OUTCOME_WEIGHTS = (0.7, 0.2, 0.1)


class _TaskWorld:
    """Name pools for one synthetic task."""

    def __init__(self, task: int, cfg: SynthConfig, shared_classes: list[str]):
        own = cfg.class_pool_per_task - len(shared_classes)
        self.classes = [f"Task{task + 1}Part{k + 1}" for k in range(own)] + shared_classes
        self.package_of = {
            name: ("PkgShared" if name in shared_classes else f"Pkg{task + 1}")
            for name in self.classes
        }
        self.unary_selectors = [f"step{c}{task + 1}" for c in "ABCD"] + [f"refresh{task + 1}"]
        self.keyword_selectors = [f"apply{task + 1}:", f"merge{task + 1}:"]
        self.selectors = self.unary_selectors + self.keyword_selectors
        self.suite_id = f"suite-task{task + 1}"


def _method_body(rng, selector: str, ivar: str, helpers: list[str], version: int) -> str:
    """A small grammar-valid method; embeds ``version`` so edits never collide."""
    if selector.endswith(":"):
        header = f"{selector.rstrip(':')}: input"
        receiver = "input"
    else:
        header = selector
        receiver = ivar
    h1 = helpers[int(rng.integers(len(helpers)))]
    h2 = helpers[int(rng.integers(len(helpers)))]
    shape = int(rng.integers(4))
    if shape == 0:
        return f"{header} ^ {receiver} {h1}"
    if shape == 1:
        return f"{header} | t | t := {receiver} {h1}. ^ t + {version}"
    if shape == 2:
        return f"{header} {ivar} := {receiver} {h1} {h2}. ^ {ivar}"
    return f"{header} ^ ({receiver} {h1}) + ({ivar} max: {version})"


def _cosmetic_variant(source: str) -> str:
    return source.replace(" ^ ", "  ^\t ", 1) + ' "tidy"'


def generate_synthetic_session(
    cfg: SynthConfig, developer_id: str = "dev1"
) -> tuple[SessionLog, Clustering]:
    """Deterministic labeled session for a given config and seed.

    Each change is assigned to the task that generated it; class names come
    mostly from per-task pools (sharing controlled by ``class_overlap``), and
    consecutive events are spaced by intra- or inter-task gap draws depending
    on whether the task switched.
    """
    cfg.validate()
    rng = rng_for(cfg.seed)

    shared_count = int(round(cfg.class_pool_per_task * cfg.class_overlap))
    shared_classes = [f"SharedCore{k + 1}" for k in range(shared_count)]
    worlds = [_TaskWorld(t, cfg, shared_classes) for t in range(cfg.num_tasks)]

    lo, hi = cfg.changes_per_task
    remaining = [int(rng.integers(lo, hi + 1)) for _ in range(cfg.num_tasks)]

    ivars: dict[str, list[str]] = {}
    sources: dict[tuple[str, str], str] = {}
    versions: dict[tuple[str, str], int] = {}
    class_defined: set[str] = set()
    ivar_counter = 0

    entries: list[SessionEntry] = []
    assignment: dict[str, str] = {}
    change_counter = 0
    test_counter = 0
    eps_hi = 0.5 * min(cfg.intra_task_gap_seconds[0], cfg.inter_task_gap_seconds[0])

    now = _BASE_TIMESTAMP
    current: int | None = None
    while any(remaining):
        available = [t for t in range(cfg.num_tasks) if remaining[t] > 0]
        if current is None:
            current = available[int(rng.integers(len(available)))]
        else:
            others = [t for t in available if t != current]
            if remaining[current] == 0:
                switched_to = others[int(rng.integers(len(others)))]
            elif others and rng.random() < cfg.interleave_prob:
                switched_to = others[int(rng.integers(len(others)))]
            else:
                switched_to = current
            if switched_to != current:
                now += rng.uniform(*cfg.inter_task_gap_seconds)
                current = switched_to
            else:
                now += rng.uniform(*cfg.intra_task_gap_seconds)
        world = worlds[current]
        remaining[current] -= 1

        class_name = world.classes[int(rng.integers(len(world.classes)))]
        if class_name not in ivars:
            ivar_counter += 1
            ivars[class_name] = [f"state{ivar_counter}"]

        change_counter += 1
        change_id = f"ch{change_counter:05d}"
        common = dict(
            id=change_id,
            developer_id=developer_id,
            timestamp=now,
            package_name=world.package_of[class_name],
            class_name=class_name,
        )

        if rng.random() < _CLASS_EVENT_PROB:
            before = tuple(ivars[class_name])
            if class_name not in class_defined:
                class_defined.add(class_name)
                event = ChangeEvent(
                    kind=CLASS_ADDED, instance_vars_after=before, **common
                )
            else:
                ivar_counter += 1
                after = before + (f"state{ivar_counter}",)
                ivars[class_name] = list(after)
                event = ChangeEvent(
                    kind=CLASS_MODIFIED,
                    instance_vars_before=before,
                    instance_vars_after=after,
                    **common,
                )
        else:
            selector = world.selectors[int(rng.integers(len(world.selectors)))]
            key = (class_name, selector)
            existing = sources.get(key)
            if existing is None:
                versions[key] = versions.get(key, 0) + 1
                body = _method_body(
                    rng, selector, ivars[class_name][0], world.unary_selectors,
                    versions[key],
                )
                sources[key] = body
                event = ChangeEvent(
                    kind=METHOD_ADDED, selector=selector, source_after=body, **common
                )
            elif rng.random() < _METHOD_REMOVE_PROB:
                del sources[key]
                event = ChangeEvent(
                    kind=METHOD_REMOVED, selector=selector,
                    source_before=existing, **common,
                )
            elif rng.random() < _COSMETIC_PROB:
                body = _cosmetic_variant(existing)
                sources[key] = body
                event = ChangeEvent(
                    kind=METHOD_MODIFIED, selector=selector,
                    source_before=existing, source_after=body, **common,
                )
            else:
                versions[key] += 1
                body = _method_body(
                    rng, selector, ivars[class_name][0], world.unary_selectors,
                    versions[key],
                )
                sources[key] = body
                event = ChangeEvent(
                    kind=METHOD_MODIFIED, selector=selector,
                    source_before=existing, source_after=body, **common,
                )

        entries.append(event)
        assignment[change_id] = f"task{current + 1}"

        if rng.random() < cfg.test_run_prob:
            test_counter += 1
            outcome = _OUTCOMES[int(rng.choice(len(_OUTCOMES), p=_OUTCOME_WEIGHTS))]
            entries.append(
                TestRunEvent(
                    id=f"tr{test_counter:05d}",
                    timestamp=now + rng.uniform(0.0, eps_hi),
                    test_suite_id=world.suite_id,
                    outcome=outcome,
                )
            )

    log = validate_session(SessionLog(developer_id=developer_id, entries=tuple(entries)))
    return log, Clustering(assignment)
