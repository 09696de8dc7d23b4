"""The 13 pairwise voters computed over two change events of one session.

Every voter is symmetric in its two arguments. Feature order and names are
part of the model file format and must not be reordered.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from untangler.code_facts import MethodFacts, ParseError, ast_equal, extract_facts, fact_delta
from untangler.events import (
    CLASS_ADDED,
    CLASS_MODIFIED,
    CLASS_REMOVED,
    METHOD_MODIFIED,
    ChangeEvent,
    SessionLog,
    TestRunEvent,
)

VOTER_NAMES: tuple[str, ...] = (
    "samePackage",
    "sameClass",
    "sameSelector",
    "bothCosmeticChanges",
    "sameTestRun",
    "numberOfEntriesDistance",
    "timeDifference",
    "reciprocalMessageSends",
    "numberOfSharedMessageSends",
    "numberOfSharedMessageSendsInDelta",
    "numberOfVariableAccesses",
    "numberOfSharedVariableAccesses",
    "numberOfSharedVariableAccessesInDelta",
)

# boolean voters take 0/1, the nominal voter 0/1/2, numeric voters any
# non-negative value; naive Bayes picks its distribution family from these.
VOTER_KINDS: dict[str, str] = {
    "samePackage": "boolean",
    "sameClass": "boolean",
    "sameSelector": "boolean",
    "bothCosmeticChanges": "boolean",
    "sameTestRun": "boolean",
    "numberOfEntriesDistance": "numeric",
    "timeDifference": "numeric",
    "reciprocalMessageSends": "nominal",
    "numberOfSharedMessageSends": "numeric",
    "numberOfSharedMessageSendsInDelta": "numeric",
    "numberOfVariableAccesses": "numeric",
    "numberOfSharedVariableAccesses": "numeric",
    "numberOfSharedVariableAccessesInDelta": "numeric",
}


class VoterError(ValueError):
    """Voter computation failed (unparseable source, unknown event)."""


@dataclass(frozen=True)
class VoterVector:
    """One value per voter, in the fixed documented order."""

    same_package: float
    same_class: float
    same_selector: float
    both_cosmetic_changes: float
    same_test_run: float
    number_of_entries_distance: float
    time_difference: float
    reciprocal_message_sends: float
    number_of_shared_message_sends: float
    number_of_shared_message_sends_in_delta: float
    number_of_variable_accesses: float
    number_of_shared_variable_accesses: float
    number_of_shared_variable_accesses_in_delta: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(VOTER_NAMES, (getattr(self, f.name) for f in fields(self))))

    def select(self, names: Iterable[str]) -> np.ndarray:
        """Project onto a voter subset, in the subset's order."""
        mapping = self.as_dict()
        try:
            return np.array([mapping[n] for n in names], dtype=np.float64)
        except KeyError as exc:
            raise VoterError(f"unknown voter name {exc.args[0]!r}") from None


_EMPTY: frozenset[str] = frozenset()


class _EventFacts:
    """Per-event code facts, parsed once."""

    __slots__ = (
        "eff_sends", "eff_accesses", "send_delta", "access_delta",
        "cosmetic", "changed_instance_vars",
    )

    def __init__(self, event: ChangeEvent):
        self.eff_sends = _EMPTY
        self.eff_accesses = _EMPTY
        self.send_delta = _EMPTY
        self.access_delta = _EMPTY
        self.cosmetic = False
        self.changed_instance_vars = _EMPTY
        if event.is_method_event:
            try:
                effective = event.source_after or event.source_before
                facts: MethodFacts = extract_facts(effective)
                self.eff_sends = facts.sends
                self.eff_accesses = facts.accesses
                self.send_delta, self.access_delta = fact_delta(
                    event.source_before, event.source_after
                )
                if event.kind == METHOD_MODIFIED:
                    self.cosmetic = ast_equal(event.source_before, event.source_after)
            except ParseError as exc:
                raise VoterError(
                    f"method source of event {event.id} failed to parse: {exc}"
                ) from None
        elif event.kind == CLASS_ADDED:
            self.changed_instance_vars = frozenset(event.instance_vars_after)
        elif event.kind == CLASS_REMOVED:
            self.changed_instance_vars = frozenset(event.instance_vars_before)
        elif event.kind == CLASS_MODIFIED:
            self.changed_instance_vars = frozenset(
                set(event.instance_vars_before) ^ set(event.instance_vars_after)
            )


class SessionContext:
    """Positional indexes and cached facts for voter computation over one log.

    Results are identical whether or not a context is reused; it only avoids
    reparsing sources for every pair.
    """

    def __init__(self, log: SessionLog):
        self.log = log
        self.entry_index: dict[str, int] = {e.id: i for i, e in enumerate(log.entries)}
        # prefix[i] = number of test runs / changes among entries[:i]
        self._test_prefix = [0]
        self._change_prefix = [0]
        for entry in log.entries:
            is_test = isinstance(entry, TestRunEvent)
            self._test_prefix.append(self._test_prefix[-1] + (1 if is_test else 0))
            self._change_prefix.append(self._change_prefix[-1] + (0 if is_test else 1))
        self._facts: dict[str, _EventFacts] = {}

    def facts(self, event: ChangeEvent) -> _EventFacts:
        cached = self._facts.get(event.id)
        if cached is None:
            cached = _EventFacts(event)
            self._facts[event.id] = cached
        return cached

    def _between(self, prefix: list[int], a: ChangeEvent, b: ChangeEvent) -> int:
        i, j = sorted((self.entry_index[a.id], self.entry_index[b.id]))
        return prefix[j] - prefix[i + 1]

    def test_runs_between(self, a: ChangeEvent, b: ChangeEvent) -> int:
        return self._between(self._test_prefix, a, b)

    def changes_between(self, a: ChangeEvent, b: ChangeEvent) -> int:
        return self._between(self._change_prefix, a, b)

    def compute(self, a: ChangeEvent, b: ChangeEvent) -> VoterVector:
        for event in (a, b):
            index = self.entry_index.get(event.id)
            if index is None or self.log.entries[index] != event:
                raise VoterError(f"event {event.id!r} is not part of the session")
        if a.id == b.id:
            raise VoterError(f"voter pair needs two distinct events, got {a.id!r} twice")

        fa, fb = self.facts(a), self.facts(b)

        same_selector = float(
            a.is_method_event and b.is_method_event and a.selector == b.selector
        )
        both_cosmetic = float(fa.cosmetic and fb.cosmetic)

        if a.is_method_event and b.is_method_event:
            reciprocal = float(b.selector in fa.eff_sends) + float(a.selector in fb.eff_sends)
        else:
            reciprocal = 0.0

        ivar_access_counts = []
        if a.is_class_event and b.is_method_event:
            ivar_access_counts.append(len(fa.changed_instance_vars & fb.eff_accesses))
        if b.is_class_event and a.is_method_event:
            ivar_access_counts.append(len(fb.changed_instance_vars & fa.eff_accesses))

        return VoterVector(
            same_package=float(a.package_name == b.package_name),
            same_class=float(a.class_name == b.class_name),
            same_selector=same_selector,
            both_cosmetic_changes=both_cosmetic,
            same_test_run=float(self.test_runs_between(a, b) == 0),
            number_of_entries_distance=float(self.changes_between(a, b)),
            time_difference=abs(a.timestamp - b.timestamp),
            reciprocal_message_sends=reciprocal,
            number_of_shared_message_sends=float(len(fa.eff_sends & fb.eff_sends)),
            number_of_shared_message_sends_in_delta=float(len(fa.send_delta & fb.send_delta)),
            number_of_variable_accesses=float(max(ivar_access_counts, default=0)),
            number_of_shared_variable_accesses=float(len(fa.eff_accesses & fb.eff_accesses)),
            number_of_shared_variable_accesses_in_delta=float(
                len(fa.access_delta & fb.access_delta)
            ),
        )


def compute_voters(a: ChangeEvent, b: ChangeEvent, log: SessionLog) -> VoterVector:
    """Voter vector for one unordered pair; symmetric in ``a`` and ``b``."""
    return SessionContext(log).compute(a, b)
