"""Labeled pair datasets built from clustered sessions.

One sample per unordered change pair closer than the pair window (3 days),
labeled true when the ground-truth clustering puts both changes in the same
cluster. Stored as CSV with a header naming the feature columns.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from untangler.events import Clustering, SessionLog, ValidationError
from untangler.ingest import write_text_atomic
from untangler.seeding import rng_for
from untangler.voters import VOTER_NAMES, SessionContext

PAIR_WINDOW_SECONDS = 259200.0  # pairs further apart than 3 days are skipped


class DatasetError(ValueError):
    """A dataset violates a structural precondition."""


@dataclass(frozen=True)
class PairSample:
    """Features and label for one unordered pair; id_a < id_b."""

    id_a: str
    id_b: str
    features: tuple[float, ...]
    label: bool


@dataclass(frozen=True)
class Dataset:
    samples: tuple[PairSample, ...]
    feature_names: tuple[str, ...]
    provenance: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.samples)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.samples:
            return (
                np.empty((0, len(self.feature_names)), dtype=np.float64),
                np.empty(0, dtype=bool),
            )
        X = np.array([s.features for s in self.samples], dtype=np.float64)
        y = np.array([s.label for s in self.samples], dtype=bool)
        return X, y

    def project(self, names: Sequence[str]) -> "Dataset":
        """Keep only the named feature columns, in the given order."""
        try:
            indices = [self.feature_names.index(n) for n in names]
        except ValueError:
            missing = set(names) - set(self.feature_names)
            raise DatasetError(f"unknown feature names {sorted(missing)}") from None
        samples = tuple(
            PairSample(s.id_a, s.id_b, tuple(s.features[i] for i in indices), s.label)
            for s in self.samples
        )
        return Dataset(samples, tuple(names), self.provenance)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(
            tuple(self.samples[i] for i in indices), self.feature_names, self.provenance
        )


def build_pairs(
    log: SessionLog, truth: Clustering, window: float = PAIR_WINDOW_SECONDS
) -> Dataset:
    """One labeled sample per unordered change pair less than ``window`` apart."""
    try:
        truth.check_covers(log)
    except ValidationError as exc:
        raise DatasetError(f"ground truth does not cover the session: {exc}") from None
    ctx = SessionContext(log)
    changes = log.change_events()
    time_index = VOTER_NAMES.index("timeDifference")
    samples: list[PairSample] = []
    for i in range(len(changes)):
        for j in range(i + 1, len(changes)):
            a, b = changes[i], changes[j]
            vector = ctx.compute(a, b).as_array()
            if vector[time_index] >= window:
                continue
            id_a, id_b = sorted((a.id, b.id))
            label = truth.assignment[a.id] == truth.assignment[b.id]
            samples.append(PairSample(id_a, id_b, tuple(map(float, vector)), label))
    return Dataset(tuple(samples), VOTER_NAMES, frozenset({log.developer_id}))


def rebalance(ds: Dataset, seed: int) -> Dataset:
    """Down-sample false pairs to twice the true count, keeping sample order.

    All true samples are kept; if fewer false samples exist than twice the
    true count, everything is kept.
    """
    true_positions = [i for i, s in enumerate(ds.samples) if s.label]
    false_positions = [i for i, s in enumerate(ds.samples) if not s.label]
    if not true_positions:
        raise DatasetError("rebalance needs at least one true sample")
    target = 2 * len(true_positions)
    if len(false_positions) <= target:
        return ds
    rng = rng_for(seed)
    chosen = rng.choice(len(false_positions), size=target, replace=False)
    keep = set(true_positions) | {false_positions[i] for i in chosen}
    return ds.subset([i for i in range(len(ds.samples)) if i in keep])


def merge_datasets(parts: Sequence[Dataset]) -> Dataset:
    if not parts:
        raise DatasetError("nothing to merge")
    names = parts[0].feature_names
    for part in parts[1:]:
        if part.feature_names != names:
            raise DatasetError("datasets disagree on feature names")
    samples = tuple(s for part in parts for s in part.samples)
    provenance = frozenset().union(*(part.provenance for part in parts))
    return Dataset(samples, names, provenance)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def dataset_to_text(ds: Dataset) -> str:
    out = io.StringIO()
    out.write("# developers: " + ",".join(sorted(ds.provenance)) + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["idA", "idB", "label", *ds.feature_names])
    for s in ds.samples:
        writer.writerow([s.id_a, s.id_b, int(s.label), *[repr(v) for v in s.features]])
    return out.getvalue()


def dataset_from_text(text: str) -> Dataset:
    lines = text.splitlines()
    provenance: frozenset[str] = frozenset()
    start = 0
    if lines and lines[0].startswith("# developers:"):
        listed = lines[0].split(":", 1)[1].strip()
        provenance = frozenset(d for d in listed.split(",") if d)
        start = 1
    rows = list(csv.reader(lines[start:]))
    if not rows:
        raise DatasetError("dataset file has no header row")
    header = rows[0]
    if header[:3] != ["idA", "idB", "label"]:
        raise DatasetError(f"unexpected dataset header {header[:3]}")
    names = tuple(header[3:])
    samples = []
    for row_number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3 + len(names):
            raise DatasetError(f"row {row_number}: expected {3 + len(names)} fields")
        samples.append(
            PairSample(
                id_a=row[0],
                id_b=row[1],
                label=row[2] == "1",
                features=tuple(float(v) for v in row[3:]),
            )
        )
    return Dataset(tuple(samples), names, provenance)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    write_text_atomic(path, dataset_to_text(ds))


def read_dataset(path: str | Path) -> Dataset:
    return dataset_from_text(Path(path).read_text(encoding="utf-8"))
