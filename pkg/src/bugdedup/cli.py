"""Command-line entry point: ingest, train, query, evaluate.

Machine output goes to stdout as JSON; diagnostics to stderr.
Exit codes: 0 success, 1 runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import corpus as corpus_mod
from . import metrics, nominate, pipeline, rerank
from .config import ConfigError, load_config
from .corpus import CorpusError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def cmd_ingest(args):
    try:
        collection, report = corpus_mod.load_corpus(args.input, args.format)
    except (CorpusError, OSError) as exc:
        return _fail(str(exc))
    pipeline.save_collection(collection, args.output)
    print(f"{report.n_records} reports, {report.n_duplicate_links} duplicate links, "
          f"{report.n_dangling_cleared} dangling references cleared", file=sys.stderr)
    print(json.dumps({"reports": report.n_records,
                      "duplicate_links": report.n_duplicate_links,
                      "dangling_cleared": report.n_dangling_cleared}))
    return EXIT_OK


def cmd_train(args):
    try:
        config = load_config(args.config, {"seed": args.seed})
        collection = pipeline.load_collection(args.collection)
    except (ConfigError, CorpusError, OSError, KeyError, ValueError) as exc:
        return _fail(str(exc))

    try:
        split = corpus_mod.split_train_test(collection, config.holdout_fraction,
                                            config.seed)
    except CorpusError:
        split = corpus_mod.SplitSpec(train_ids={r.id for r in collection},
                                     test_pairs=[])
        print("warning: no duplicate links; empty test split", file=sys.stderr)

    try:
        trained, notes = pipeline.train(collection, split, config)
    except (ValueError, rerank.RerankError) as exc:
        return _fail(str(exc))
    pipeline.save_artifacts(trained, collection, split, args.output)

    for note in notes:
        print(note, file=sys.stderr)
    print(f"algorithm={trained.index.algorithm.name}", file=sys.stderr)
    print(json.dumps({
        "algorithm": trained.index.algorithm.name,
        "indexed": len(trained.index),
        "train": len(split.train_ids),
        "test_pairs": len(split.test_pairs),
        "classifier": "skipped" if trained.classifier is None else trained.classifier.kind,
    }))
    return EXIT_OK


def cmd_query(args):
    try:
        config = load_config(args.config, {"seed": args.seed})
        trained = pipeline.load_artifacts(args.artifacts, config)
    except (ConfigError, FileNotFoundError, CorpusError) as exc:
        return _fail(str(exc))

    try:
        record = json.load(sys.stdin)
        report = corpus_mod.collection_from_json({"reports": [record]}).reports[0]
        processed, vector = trained.process_and_vectorize(report)
    except (json.JSONDecodeError, CorpusError, ValueError) as exc:
        return _fail(f"malformed report: {exc}")

    nominees = nominate.knn_query(trained.index, trained.cache, vector, args.k)
    degraded = False
    if not args.no_filter and trained.classifier is not None:
        outcome = rerank.filter_nominees(trained.classifier, processed, nominees,
                                         trained.processed, trained.space)
        nominees, degraded = outcome.nominations, outcome.degraded
    if args.submit:
        nominate.cache_add(trained.cache, report.id, vector, trained.index)
        trained.processed[report.id] = processed

    print(json.dumps({
        "degraded": degraded,
        "results": [{"id": n.report_id, "distance": n.distance,
                     "similarity": n.similarity} for n in nominees],
    }))
    return EXIT_OK


def _write_csvs(result, out_dir):
    with open(os.path.join(out_dir, "positions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["position", "count"])
        for pos, count in sorted(result.histogram.counts.items()):
            writer.writerow([pos, count])
    with open(os.path.join(out_dir, "curve.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["position", "cumulative_count"])
        writer.writerows(result.curve)
    with open(os.path.join(out_dir, "similarity_bins.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for (lo, hi), count in sorted(result.similarity_bins.items()):
            writer.writerow([lo, hi, count])


def cmd_evaluate(args):
    try:
        config = load_config(args.config, {"seed": args.seed})
        trained = pipeline.load_artifacts(args.artifacts, config)
        split = pipeline.load_split(args.split or args.artifacts)
    except (ConfigError, FileNotFoundError, CorpusError) as exc:
        return _fail(str(exc))
    if not split.test_pairs:
        return _fail("no test pairs")

    result = metrics.run_evaluation(split, trained, k=args.k,
                                    with_filter=not args.no_filter)
    report = metrics.result_to_json(result, dataset=args.dataset, k=args.k,
                                    with_filter=not args.no_filter)
    try:
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, "metrics.json"), "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
        _write_csvs(result, args.output)
    except OSError as exc:
        return _fail(f"cannot write {args.output}: {exc}")

    for n in sorted(result.recall):
        print(f"recall@{n} = {result.recall[n]:.4f}", file=sys.stderr)
    print(json.dumps(report))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="bugdedup",
                                     description="Duplicate bug-report retrieval")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and store a report collection")
    p.add_argument("input")
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit feature space, index, and classifier")
    p.add_argument("collection")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("query", help="rank duplicates for a report on stdin")
    p.add_argument("artifacts")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--submit", action="store_true",
                   help="add the queried report to the recent cache")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="score the held-out split")
    p.add_argument("artifacts")
    p.add_argument("--split", default=None)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--dataset", default="corpus")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
