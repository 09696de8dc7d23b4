"""Command-line entry point wiring all stages of the toolkit.

Subcommands mirror the pipeline: simulate -> featurize -> train -> untangle ->
evaluate, plus cv/importance/trim/experiment for model studies and serve for
the browser review UI. Every subcommand is reproducible: identical flags and
seed produce byte-identical output files. Report subcommands render a PNG
figure next to their delimited output (suppress with --no-figures).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from untangler import clusterer, evaluator, figures
from untangler.ingest import (
    IngestError,
    SynthConfig,
    generate_synthetic_session,
    read_clustering,
    read_session,
    write_clustering,
    write_session,
    write_text_atomic,
)
from untangler.learner import (
    ForestConfig,
    LogisticConfig,
    Metrics,
    build_pairs,
    cross_validate,
    make_trainer,
    permutation_importance,
    read_dataset,
    read_model,
    rebalance,
    run_dev_experiment,
    trim_voters_detailed,
    write_dataset,
    write_model,
)
from untangler.seeding import DEFAULT_SEED

_METRIC_COLUMNS = ("auc", "acc", "prec", "rec", "fmeasure", "gmean", "tp", "fp", "fn", "tn")


def _int_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def _float_range(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return (float(lo), float(hi or lo))


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


def _metrics_row(name: str, metrics: Metrics) -> list:
    record = metrics.as_dict()
    return [name] + ["" if record[c] is None else repr(record[c]) if isinstance(record[c], float) else record[c]
                     for c in _METRIC_COLUMNS]


def _metrics_csv(rows: dict[str, Metrics]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["config", *_METRIC_COLUMNS])
    for name, metrics in rows.items():
        writer.writerow(_metrics_row(name, metrics))
    return out.getvalue()


def _trainer_from_args(args) -> tuple:
    forest = ForestConfig(trees=args.trees, vars_per_split=args.vars_per_split)
    logistic = LogisticConfig(rate=args.rate, epochs=args.epochs, l2=args.l2)
    return make_trainer(args.classifier, args.seed, forest, logistic)


def _add_classifier_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--classifier", choices=["logreg", "nb", "forest"],
                        default="forest")
    parser.add_argument("--trees", type=int, default=500,
                        help="forest size (default 500)")
    parser.add_argument("--vars-per-split", type=int, default=None,
                        help="features tried per split (default min(5, #features))")
    parser.add_argument("--rate", type=float, default=0.1)
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--l2", type=float, default=1e-4)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = SynthConfig(
        num_tasks=args.tasks,
        changes_per_task=args.changes_per_task,
        class_pool_per_task=args.class_pool,
        class_overlap=args.class_overlap,
        interleave_prob=args.interleave_prob,
        intra_task_gap_seconds=args.intra_gap,
        inter_task_gap_seconds=args.inter_gap,
        test_run_prob=args.test_run_prob,
        seed=args.seed,
    )
    log, truth = generate_synthetic_session(cfg, developer_id=args.developer)
    write_session(log, args.out)
    write_clustering(truth, args.truth)
    print(f"wrote {len(log.entries)} events to {args.out}, "
          f"{len(truth.clusters())} clusters to {args.truth}")
    return 0


def _cmd_featurize(args) -> int:
    log = read_session(args.session)
    truth = read_clustering(args.truth, session=log)
    ds = build_pairs(log, truth, window=args.pair_window_secs)
    write_dataset(ds, args.out)
    positives = sum(s.label for s in ds.samples)
    print(f"wrote {len(ds)} pairs ({positives} same-task) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = read_dataset(args.data)
    balanced = rebalance(ds, args.seed)
    model = _trainer_from_args(args)(balanced)
    write_model(model, args.out)
    print(f"trained {args.classifier} on {len(balanced)} pairs -> {args.out}")
    return 0


def _cmd_cv(args) -> int:
    ds = read_dataset(args.data)
    metrics = cross_validate(ds, args.folds, _trainer_from_args(args), args.seed)
    write_text_atomic(args.out, _metrics_csv({f"cv{args.folds}": metrics}))
    if not args.no_figures:
        scores = {c: getattr(metrics, c) for c in _METRIC_COLUMNS[:6]}
        figures.metrics_bars(scores, _figure_path(args.out),
                             title=f"{args.folds}-fold cross validation")
    print(_metrics_csv({f"cv{args.folds}": metrics}).rstrip())
    return 0


def _cmd_importance(args) -> int:
    ds = read_dataset(args.data)
    ranking = permutation_importance(ds, _trainer_from_args(args), args.runs, args.seed)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["voter", "meanAccuracyDrop"])
    for name, drop in ranking:
        writer.writerow([name, repr(drop)])
    write_text_atomic(args.out, out.getvalue())
    if not args.no_figures:
        figures.importance_bars(ranking, _figure_path(args.out))
    print(f"wrote importance ranking ({len(ranking)} voters) to {args.out}")
    return 0


def _cmd_trim(args) -> int:
    ds = read_dataset(args.data)
    ranking_rows = list(csv.reader(Path(args.ranking).read_text(encoding="utf-8").splitlines()))
    ranked = [row[0] for row in ranking_rows[1:] if row]
    result = trim_voters_detailed(
        ds, ranked, args.max_acc_loss,
        trainer=_trainer_from_args(args), folds=args.folds, seed=args.seed,
    )
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["voter"])
    for name in result.kept:
        writer.writerow([name])
    write_text_atomic(args.out, out.getvalue())
    model = _trainer_from_args(args)(rebalance(ds.project(result.kept), args.seed))
    write_model(model, args.model_out)
    if not args.no_figures:
        figures.trim_curve(result.steps, result.baseline_acc,
                           result.baseline_acc - args.max_acc_loss,
                           _figure_path(args.out))
    print(f"kept {len(result.kept)} voters: {', '.join(result.kept)}")
    return 0


def _cmd_untangle(args) -> int:
    log = read_session(args.session)
    model = read_model(args.model)
    cfg = clusterer.CutConfig(
        low_similarity_bound=args.low_sim_bound,
        pair_window_seconds=args.pair_window_secs,
    )
    clustering = clusterer.untangle(log, model, cfg)
    write_clustering(clustering, args.out)
    print(f"untangled {len(clustering)} changes into "
          f"{len(clustering.clusters())} clusters -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    session = read_session(args.session) if args.session else None
    computed = read_clustering(args.computed, session=session)
    expected = read_clustering(args.expected, session=session)
    result = evaluator.match_clusterings(computed, expected)
    write_text_atomic(args.out, result.to_line() + "\n")
    if not args.no_figures:
        pairs = dict(result.pairs)
        computed_clusters = computed.clusters()
        expected_clusters = expected.clusters()
        rows = sorted(set(computed_clusters) | {c for c in pairs if c not in computed_clusters})
        cols = sorted(set(expected_clusters) | {e for e in pairs.values() if e not in expected_clusters})
        matrix = np.array([
            [evaluator.jaccard(set(computed_clusters.get(r, set())),
                               set(expected_clusters.get(c, set()))) for c in cols]
            for r in rows
        ])
        matched = [(rows.index(r), cols.index(e)) for r, e in result.pairs]
        figures.jaccard_heatmap(matrix, rows, cols, matched, _figure_path(args.out))
    print(f"successRate={result.success_rate:.4f} totalJaccard={result.total_jaccard:.4f}")
    return 0


def _cmd_experiment(args) -> int:
    manifest_dir = Path(args.manifest).parent
    sessions = []
    for line_number, line in enumerate(
        Path(args.manifest).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"manifest line {line_number}: {exc.msg}") from None
        log = read_session(manifest_dir / record["session"])
        truth = read_clustering(manifest_dir / record["truth"], session=log)
        sessions.append((log, truth))
    results = run_dev_experiment(
        sessions, args.mode, _trainer_from_args(args), args.seed, args.folds,
        window=args.pair_window_secs,
    )
    write_text_atomic(args.out, _metrics_csv(results))
    if not args.no_figures:
        table = {name: m.as_dict() for name, m in results.items()}
        figures.experiment_bars(table, _figure_path(args.out))
    print(_metrics_csv(results).rstrip())
    return 0


def _cmd_serve(args) -> int:
    from untangler.server import serve_forever

    return serve_forever(
        session_path=args.session,
        model_path=args.model,
        out_path=args.out,
        port=args.port,
        clustering_path=args.clustering,
        ui_dir=args.ui,
        low_sim_bound=args.low_sim_bound,
        pair_window_seconds=args.pair_window_secs,
    )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="untangler",
        description="Untangle fine-grained IDE change logs into task clusters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"random seed (default {DEFAULT_SEED})")
        return p

    p = common(sub.add_parser("simulate", help="generate a labeled synthetic session"))
    p.add_argument("--tasks", type=int, default=3)
    p.add_argument("--changes-per-task", type=_int_range, default=(8, 15),
                   metavar="LO:HI")
    p.add_argument("--class-pool", type=int, default=3)
    p.add_argument("--class-overlap", type=float, default=0.0)
    p.add_argument("--interleave-prob", type=float, default=0.1)
    p.add_argument("--intra-gap", dest="intra_gap", type=_float_range,
                   default=(5.0, 90.0), metavar="LO:HI")
    p.add_argument("--inter-gap", dest="inter_gap", type=_float_range,
                   default=(1800.0, 7200.0), metavar="LO:HI")
    p.add_argument("--test-run-prob", type=float, default=0.2)
    p.add_argument("--developer", default="dev1")
    p.add_argument("--out", required=True, help="session file to write")
    p.add_argument("--truth", required=True, help="ground-truth clustering file to write")
    p.set_defaults(handler=_cmd_simulate)

    p = common(sub.add_parser("featurize", help="build the labeled pair dataset"))
    p.add_argument("--session", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--pair-window-secs", type=float, default=259200.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_featurize)

    p = common(sub.add_parser("train", help="train a classifier on a pair dataset"))
    p.add_argument("--data", required=True)
    _add_classifier_flags(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(handler=_cmd_train)

    p = common(sub.add_parser("cv", help="k-fold cross validation report"))
    p.add_argument("--data", required=True)
    _add_classifier_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_cv)

    p = common(sub.add_parser("importance", help="permutation importance ranking"))
    p.add_argument("--data", required=True)
    _add_classifier_flags(p)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_importance)

    p = common(sub.add_parser("trim", help="trim voters and retrain"))
    p.add_argument("--data", required=True)
    p.add_argument("--ranking", required=True, help="importance csv")
    p.add_argument("--max-acc-loss", type=float, default=0.03)
    _add_classifier_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="kept-voter csv")
    p.add_argument("--model-out", required=True, help="retrained model file")
    p.set_defaults(handler=_cmd_trim)

    p = common(sub.add_parser("untangle", help="cluster a session with a model"))
    p.add_argument("--session", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--low-sim-bound", type=float, default=0.25)
    p.add_argument("--pair-window-secs", type=float, default=259200.0)
    p.add_argument("--out", required=True, help="clustering file to write")
    p.set_defaults(handler=_cmd_untangle)

    p = common(sub.add_parser("evaluate", help="compare computed vs expected clustering"))
    p.add_argument("--computed", required=True)
    p.add_argument("--expected", required=True)
    p.add_argument("--session", default=None,
                   help="optional session file for coverage validation")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="match report to write")
    p.set_defaults(handler=_cmd_evaluate)

    p = common(sub.add_parser("experiment", help="intradev/crossdev/combined study"))
    p.add_argument("--manifest", required=True,
                   help="jsonl of {\"session\":…, \"truth\":…} paths")
    p.add_argument("--mode", choices=["intradev", "crossdev", "combined"], required=True)
    _add_classifier_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--pair-window-secs", type=float, default=259200.0)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_experiment)

    p = common(sub.add_parser("serve", help="host the review UI endpoints"))
    p.add_argument("--session", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--clustering", default=None,
                   help="proposed clustering file (default: untangle on startup)")
    p.add_argument("--out", required=True,
                   help="path where corrected clusterings are persisted")
    p.add_argument("--port", type=int, default=8752)
    p.add_argument("--ui", default=None, help="directory of built UI assets to serve")
    p.add_argument("--low-sim-bound", type=float, default=0.25)
    p.add_argument("--pair-window-secs", type=float, default=259200.0)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
