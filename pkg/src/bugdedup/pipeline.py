"""Trained-artifact bundle: fit, persist, and reload the full pipeline."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from . import corpus as corpus_mod
from . import nominate, rerank, vectorize
from .config import Config
from .preprocess import build_document


@dataclass
class TrainedPipeline:
    space: vectorize.FeatureSpace
    index: nominate.NeighborIndex
    cache: nominate.RecentCache
    classifier: rerank.PairClassifier | None
    processed: dict  # report id -> ProcessedReport
    config: Config

    def vectorize(self, processed_report):
        return vectorize.assemble_vector(self.space, processed_report)

    def process_and_vectorize(self, report):
        processed = build_document(report, self.config.trace_patterns)
        return processed, self.vectorize(processed)


def train(collection, split, config: Config) -> TrainedPipeline:
    """Fit the feature space, build the index over indexable training
    originals, and train the pair classifier when duplicates exist.

    Returns (pipeline, notes); notes flag a skipped classifier.
    """
    notes = []
    train_reports = [r for r in collection if r.id in split.train_ids]
    processed = {r.id: build_document(r, config.trace_patterns) for r in collection}

    space = vectorize.fit_feature_space(
        (processed[r.id] for r in train_reports), config.weights)

    # the searchable knowledge base holds only roots and uniques
    indexable = [r.id for r in train_reports if r.dup_of is None]
    vectors = [vectorize.assemble_vector(space, processed[rid]) for rid in indexable]
    index = nominate.build_index(
        vectors, indexable, choice=config.algorithm, k=config.k,
        n_queries=max(1, len(split.test_pairs)),
        brute_max_samples=config.brute_max_samples,
        kd_max_features=config.kd_max_features,
        ball_max_features=config.ball_max_features)

    if config.encoder_endpoint:
        classifier = rerank.PairClassifier(kind="external_encoder",
                                           endpoint=config.encoder_endpoint,
                                           timeout=config.encoder_timeout,
                                           threshold=config.threshold)
    else:
        try:
            pairs = rerank.build_training_pairs(collection, config.pair_ratio,
                                                config.seed)
            classifier = rerank.train_classifier(
                pairs, processed, space, threshold=config.threshold,
                learning_rate=config.learning_rate, epochs=config.epochs,
                seed=config.seed)
        except rerank.RerankError as exc:
            classifier = None
            notes.append(f"classifier: skipped ({exc})")

    pipeline = TrainedPipeline(space=space, index=index,
                               cache=nominate.RecentCache(config.cache_capacity),
                               classifier=classifier, processed=processed,
                               config=config)
    return pipeline, notes


# ---------------------------------------------------------------------------
# Versioned JSON artifacts
# ---------------------------------------------------------------------------

def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def split_to_json(split) -> dict:
    return {"version": 1, "train_ids": sorted(split.train_ids),
            "test_pairs": [list(p) for p in split.test_pairs]}


def split_from_json(data) -> corpus_mod.SplitSpec:
    return corpus_mod.SplitSpec(train_ids=set(data["train_ids"]),
                                test_pairs=[tuple(p) for p in data["test_pairs"]])


def save_collection(collection, path):
    _write_json(path, corpus_mod.collection_to_json(collection))


def load_collection(path):
    return corpus_mod.collection_from_json(_read_json(path))


def save_artifacts(pipeline: TrainedPipeline, collection, split, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "feature_space.json"),
                vectorize.feature_space_to_json(pipeline.space))
    _write_json(os.path.join(out_dir, "index.json"),
                nominate.index_to_json(pipeline.index))
    if pipeline.classifier is not None:
        _write_json(os.path.join(out_dir, "classifier.json"),
                    rerank.classifier_to_json(pipeline.classifier))
    _write_json(os.path.join(out_dir, "collection.json"),
                corpus_mod.collection_to_json(collection))
    if split is not None:
        _write_json(os.path.join(out_dir, "split.json"), split_to_json(split))


def load_artifacts(artifacts_dir, config: Config) -> TrainedPipeline:
    space_path = os.path.join(artifacts_dir, "feature_space.json")
    index_path = os.path.join(artifacts_dir, "index.json")
    collection_path = os.path.join(artifacts_dir, "collection.json")
    for path in (space_path, index_path, collection_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing trained artifact {path}")

    space = vectorize.feature_space_from_json(_read_json(space_path))
    index = nominate.index_from_json(_read_json(index_path))
    collection = corpus_mod.collection_from_json(_read_json(collection_path))
    processed = {r.id: build_document(r, config.trace_patterns) for r in collection}

    classifier = None
    clf_path = os.path.join(artifacts_dir, "classifier.json")
    if os.path.exists(clf_path):
        classifier = rerank.classifier_from_json(_read_json(clf_path))

    return TrainedPipeline(space=space, index=index,
                           cache=nominate.RecentCache(config.cache_capacity),
                           classifier=classifier, processed=processed,
                           config=config)


def load_split(artifacts_or_path):
    path = artifacts_or_path
    if os.path.isdir(path):
        path = os.path.join(path, "split.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing split artifact {path}")
    return split_from_json(_read_json(path))
