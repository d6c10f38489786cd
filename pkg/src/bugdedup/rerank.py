"""Pair-classification filter over nominated reports.

Training pairs are original-duplicate (positive) and original-original
(negative) couples at a 3:1 ratio. The classifier contract (pair ->
duplicate/distinct) has two implementations: a local feature-based
logistic scorer and an adapter to an external encoder service.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import requests

from .corpus import ReportCollection, resolve_parent
from .vectorize import FeatureSpace, pair_text

DEFAULT_PAIR_RATIO = 3.0
DEFAULT_THRESHOLD = 0.5
N_PAIR_FEATURES = 6


class RerankError(Exception):
    pass


@dataclass
class PairSet:
    positives: list  # (child_id, parent_id)
    negatives: list  # (id, id), both originals
    ratio: float


@dataclass
class PairClassifier:
    kind: str  # reference_scorer | external_encoder
    weights: list = field(default_factory=lambda: [0.0] * N_PAIR_FEATURES)
    bias: float = 0.0
    threshold: float = DEFAULT_THRESHOLD
    endpoint: str | None = None
    timeout: float = 2.0


@dataclass
class FilterOutcome:
    nominations: list
    degraded: bool = False


def build_training_pairs(collection: ReportCollection, ratio=DEFAULT_PAIR_RATIO,
                         seed=0) -> PairSet:
    """All child-root links as positives plus seeded-random original pairs
    as negatives, floor(|positives| / ratio) of them."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    positives = [(child, resolve_parent(collection, child))
                 for child in collection.duplicate_children()]
    originals = collection.originals()
    if not positives:
        raise RerankError("no duplicate links: nothing to learn from")
    if len(originals) < 2:
        raise RerankError("need at least two originals for negative pairs")

    rng = random.Random(seed)
    n_negatives = int(len(positives) // ratio)
    # pairs may repeat: small corpora can't always supply distinct couples
    negatives = [tuple(rng.sample(originals, 2)) for _ in range(n_negatives)]
    return PairSet(positives=positives, negatives=negatives, ratio=ratio)


def _cosine(u, v):
    # both-empty blocks count as a perfect match, single-empty as none
    if not u.entries and not v.entries:
        return 1.0
    if not u.entries or not v.entries:
        return 0.0
    return min(1.0, max(0.0, u.dot(v) / (u.norm() * v.norm())))


def _jaccard(a: set, b: set):
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def pair_features(a, b, space: FeatureSpace):
    """Six symmetric match signals in [0, 1] for a report pair."""
    sum_a = space.summary_model.transform(a.doc_summary)
    sum_b = space.summary_model.transform(b.doc_summary)
    desc_a = space.description_model.transform(a.doc_description)
    desc_b = space.description_model.transform(b.doc_description)
    len_a, len_b = len(a.doc_summary), len(b.doc_summary)
    if len_a == 0 and len_b == 0:
        length_ratio = 1.0
    else:
        length_ratio = min(len_a, len_b) / max(len_a, len_b)
    return [
        _cosine(sum_a, sum_b),
        _cosine(desc_a, desc_b),
        1.0 if a.component == b.component else 0.0,
        _jaccard(set(a.platform.items()), set(b.platform.items())),
        _jaccard(set(a.doc_summary), set(b.doc_summary)),
        length_ratio,
    ]


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def train_classifier(pairs: PairSet, reports, space: FeatureSpace,
                     threshold=DEFAULT_THRESHOLD, learning_rate=0.5,
                     epochs=300, seed=0) -> PairClassifier:
    """Fit the reference logistic scorer on pair features by batch gradient
    descent with a fixed epoch budget; deterministic for a fixed seed."""
    samples = []
    for child, parent in pairs.positives:
        samples.append((pair_features(reports[child], reports[parent], space), 1.0))
    for a, b in pairs.negatives:
        samples.append((pair_features(reports[a], reports[b], space), 0.0))
    if not samples:
        raise RerankError("empty pair set")

    rng = random.Random(seed)
    weights = [rng.uniform(-0.01, 0.01) for _ in range(N_PAIR_FEATURES)]
    bias = 0.0
    n = len(samples)
    for _ in range(epochs):
        grad_w = [0.0] * N_PAIR_FEATURES
        grad_b = 0.0
        for features, label in samples:
            err = _sigmoid(bias + sum(w * f for w, f in zip(weights, features))) - label
            for j, f in enumerate(features):
                grad_w[j] += err * f
            grad_b += err
        weights = [w - learning_rate * g / n for w, g in zip(weights, grad_w)]
        bias -= learning_rate * grad_b / n
    return PairClassifier(kind="reference_scorer", weights=weights, bias=bias,
                          threshold=threshold)


def classify_pair(clf: PairClassifier, a, b, space: FeatureSpace = None):
    """Score a pair; duplicate iff score >= threshold."""
    if clf.kind == "reference_scorer":
        if space is None:
            raise ValueError("reference scorer needs a fitted feature space")
        features = pair_features(a, b, space)
        score = _sigmoid(clf.bias + sum(w * f for w, f in zip(clf.weights, features)))
    elif clf.kind == "external_encoder":
        text_a, text_b = pair_text(a, b)
        resp = requests.post(clf.endpoint, json={"text_a": text_a, "text_b": text_b},
                             timeout=clf.timeout)
        resp.raise_for_status()
        score = float(resp.json()["score"])
    else:
        raise ValueError(f"unknown classifier kind {clf.kind!r}")
    label = "duplicate" if score >= clf.threshold else "distinct"
    return label, score


def filter_nominees(clf: PairClassifier, query, nominees, reports,
                    space: FeatureSpace = None) -> FilterOutcome:
    """Keep nominees classified duplicate, preserving order and scores.

    On external-encoder failure the full list passes through with the
    degraded flag set; the nominator list is the primary output and the
    filter only prunes.
    """
    kept = []
    for nomination in nominees:
        try:
            label, _ = classify_pair(clf, query, reports[nomination.report_id], space)
        except requests.RequestException:
            return FilterOutcome(nominations=list(nominees), degraded=True)
        if label == "duplicate":
            kept.append(nomination)
    return FilterOutcome(nominations=kept, degraded=False)


def classifier_to_json(clf: PairClassifier) -> dict:
    return {
        "version": 1,
        "kind": clf.kind,
        "weights": clf.weights,
        "bias": clf.bias,
        "threshold": clf.threshold,
        "endpoint": clf.endpoint,
        "timeout": clf.timeout,
    }


def classifier_from_json(data: dict) -> PairClassifier:
    return PairClassifier(kind=data["kind"], weights=list(data["weights"]),
                          bias=data["bias"], threshold=data["threshold"],
                          endpoint=data.get("endpoint"), timeout=data.get("timeout", 2.0))
