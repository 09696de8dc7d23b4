"""Shared builders for tests: events, logs, datasets, and random method ASTs."""

from __future__ import annotations

import numpy as np

from untangler.code_facts import (
    Assignment,
    Block,
    Cascade,
    Literal,
    MethodAst,
    Return,
    Send,
    Variable,
)
from untangler.events import (
    ChangeEvent,
    Clustering,
    SessionLog,
    TestRunEvent,
    validate_session,
)
from untangler.learner.datasets import Dataset, PairSample
from untangler.learner.models import RandomForestModel
from untangler.voters import VOTER_NAMES

DEV = "dev1"


def method_event(
    event_id: str,
    timestamp: float,
    *,
    cls: str = "Point",
    pkg: str = "Geom",
    selector: str = "doIt",
    before: str = "",
    after: str = "doIt ^ 1",
    dev: str = DEV,
) -> ChangeEvent:
    if before and after:
        kind = "method-modified"
    elif after:
        kind = "method-added"
    else:
        kind = "method-removed"
    return ChangeEvent(
        id=event_id, developer_id=dev, timestamp=timestamp, kind=kind,
        package_name=pkg, class_name=cls, selector=selector,
        source_before=before, source_after=after,
    )


def class_event(
    event_id: str,
    timestamp: float,
    *,
    cls: str = "Point",
    pkg: str = "Geom",
    kind: str = "class-modified",
    ivars_before: tuple[str, ...] = (),
    ivars_after: tuple[str, ...] = (),
    dev: str = DEV,
) -> ChangeEvent:
    return ChangeEvent(
        id=event_id, developer_id=dev, timestamp=timestamp, kind=kind,
        package_name=pkg, class_name=cls,
        instance_vars_before=ivars_before, instance_vars_after=ivars_after,
    )


def suite_run(event_id: str, timestamp: float, suite: str = "suite1",
             outcome: str = "pass") -> TestRunEvent:
    return TestRunEvent(id=event_id, timestamp=timestamp,
                        test_suite_id=suite, outcome=outcome)


def log_of(*entries, dev: str = DEV, validated: bool = True) -> SessionLog:
    log = SessionLog(developer_id=dev, entries=tuple(entries))
    return validate_session(log) if validated else log


def clustering_of(**clusters) -> Clustering:
    return Clustering.from_clusters({k: set(v) for k, v in clusters.items()})


def dataset_from_arrays(X, y, names=None, provenance=("dev1",)) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    names = tuple(names) if names is not None else tuple(
        f"f{k}" for k in range(X.shape[1])
    )
    samples = tuple(
        PairSample(f"a{i:05d}", f"b{i:05d}", tuple(row), bool(label))
        for i, (row, label) in enumerate(zip(X, y))
    )
    return Dataset(samples, names, frozenset(provenance))


def constant_model(p: float, names=VOTER_NAMES) -> RandomForestModel:
    """A one-leaf forest that scores every pair the same."""
    return RandomForestModel(
        feature_names=tuple(names), trees=[{"p": float(p)}], tree_seeds=[0],
        vars_per_split=1, trained_on=tuple(names),
    )


# ---------------------------------------------------------------------------
# Random method ASTs (printer/parser round-trip fodder)
# ---------------------------------------------------------------------------

_VARS = ["alpha", "beta", "items", "cache", "count", "value2", "self"]
_UNARY = ["size", "abs", "reset", "runFast", "yourself"]
_BINARY = ["+", "-", "*", "<=", "@", "//"]
_KEYWORD = ["at:", "at:put:", "inject:into:", "copyFrom:to:"]
_SYMBOLS = ["go", "at:put:", "+", "deep thought"]
_STRINGS = ["hello", "it's", "", "two words"]
_CHARS = ["a", "Z", "9", "+"]


def _rand_literal(rng: np.random.Generator, allow_array: bool = True) -> Literal:
    kind = int(rng.integers(8 if allow_array else 7))
    if kind == 0:
        return Literal("int", int(rng.integers(-50, 500)))
    if kind == 1:
        return Literal("float", float(np.round(rng.uniform(-5, 5), 3)))
    if kind == 2:
        return Literal("string", _STRINGS[int(rng.integers(len(_STRINGS)))])
    if kind == 3:
        return Literal("symbol", _SYMBOLS[int(rng.integers(len(_SYMBOLS)))])
    if kind == 4:
        return Literal("char", _CHARS[int(rng.integers(len(_CHARS)))])
    if kind == 5:
        return Literal("bool", bool(rng.integers(2)))
    if kind == 6:
        return Literal("nil", None)
    count = int(rng.integers(0, 4))
    return Literal("array", tuple(_rand_literal(rng, allow_array=False)
                                  for _ in range(count)))


def _rand_expr(rng: np.random.Generator, depth: int):
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return Variable(_VARS[int(rng.integers(len(_VARS)))])
        return _rand_literal(rng)
    kind = int(rng.integers(6))
    if kind == 0:
        return Send(_rand_expr(rng, depth - 1),
                    _UNARY[int(rng.integers(len(_UNARY)))])
    if kind == 1:
        return Send(_rand_expr(rng, depth - 1),
                    _BINARY[int(rng.integers(len(_BINARY)))],
                    (_rand_expr(rng, depth - 1),))
    if kind == 2:
        selector = _KEYWORD[int(rng.integers(len(_KEYWORD)))]
        arity = selector.count(":")
        return Send(_rand_expr(rng, depth - 1), selector,
                    tuple(_rand_expr(rng, depth - 1) for _ in range(arity)))
    if kind == 3:
        return Assignment(_VARS[int(rng.integers(len(_VARS) - 1))],
                          _rand_expr(rng, depth - 1))
    if kind == 4:
        messages = []
        for _ in range(int(rng.integers(2, 4))):
            choice = int(rng.integers(3))
            if choice == 0:
                messages.append((_UNARY[int(rng.integers(len(_UNARY)))], ()))
            elif choice == 1:
                messages.append((_BINARY[int(rng.integers(len(_BINARY)))],
                                 (_rand_expr(rng, depth - 1),)))
            else:
                selector = _KEYWORD[int(rng.integers(len(_KEYWORD)))]
                messages.append((selector, tuple(
                    _rand_expr(rng, depth - 1) for _ in range(selector.count(":")))))
        return Cascade(_rand_expr(rng, depth - 1), tuple(messages))
    params = tuple(f"p{k}" for k in range(int(rng.integers(0, 3))))
    temps = tuple(f"t{k}" for k in range(int(rng.integers(0, 2))))
    body = tuple(_rand_statement(rng, depth - 1) for _ in range(int(rng.integers(0, 3))))
    return Block(params, temps, body)


def _rand_statement(rng: np.random.Generator, depth: int):
    expr = _rand_expr(rng, depth)
    if rng.random() < 0.25:
        return Return(expr)
    return expr


def random_method_ast(rng: np.random.Generator) -> MethodAst:
    kind = int(rng.integers(3))
    if kind == 0:
        selector, params = "runIt", ()
    elif kind == 1:
        selector, params = "+", ("other",)
    else:
        selector, params = "at:put:", ("key", "val")
    temps = tuple(f"tmp{k}" for k in range(int(rng.integers(0, 3))))
    body = tuple(_rand_statement(rng, 3) for _ in range(int(rng.integers(1, 4))))
    return MethodAst(selector, params, temps, body)
