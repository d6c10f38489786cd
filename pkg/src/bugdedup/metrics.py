"""Retrieval scoring: recall@n, parent-position histograms, similarity
distributions, and cumulative position curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

NOT_FOUND = -1


@dataclass
class EvaluationRecord:
    child_id: str
    parent_id: str
    found_position: int  # 1..k, or -1 when the parent is absent from the list
    similarity_to_parent: float | None = None

    def __post_init__(self):
        if (self.found_position == NOT_FOUND) != (self.similarity_to_parent is None):
            raise ValueError("similarity must be present exactly when the parent was found")


@dataclass
class PositionHistogram:
    counts: dict  # position (1..k and -1) -> count
    total: int


def recall_at_n(records, n: int) -> float:
    """Fraction of children whose parent appears within the top n."""
    records = list(records)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not records:
        raise ValueError("no evaluation records")
    hits = sum(1 for r in records if 1 <= r.found_position <= n)
    return hits / len(records)


def position_histogram(records, k: int) -> PositionHistogram:
    counts = {pos: 0 for pos in list(range(1, k + 1)) + [NOT_FOUND]}
    records = list(records)
    for r in records:
        if r.found_position not in counts:
            raise ValueError(f"position {r.found_position} outside 1..{k} and -1")
        counts[r.found_position] += 1
    return PositionHistogram(counts=counts, total=len(records))


def cumulative_curve(hist: PositionHistogram):
    """Prefix sums over positions 1..k; the not-found bucket is excluded."""
    positions = sorted(p for p in hist.counts if p != NOT_FOUND)
    curve = []
    running = 0
    for pos in positions:
        running += hist.counts[pos]
        curve.append((pos, running))
    return curve


def similarity_distribution(records, bin_width: float):
    """Histogram of parent similarities over [0,1]; the last bin is closed."""
    if not 0 < bin_width <= 1:
        raise ValueError("bin_width must be in (0, 1]")
    n_bins = math.ceil(round(1.0 / bin_width, 9))
    bins = {i: 0 for i in range(n_bins)}
    for r in records:
        if r.found_position == NOT_FOUND:
            continue
        bins[min(int(r.similarity_to_parent / bin_width), n_bins - 1)] += 1
    return {(round(i * bin_width, 9), round(min((i + 1) * bin_width, 1.0), 9)): c
            for i, c in bins.items()}


@dataclass
class EvaluationResult:
    records: list
    histogram: PositionHistogram
    recall: dict  # n -> recall@n
    curve: list
    similarity_bins: dict
    mean_list_length: float


def run_evaluation(split, pipeline, k=5, with_filter=False,
                   bin_width=0.1) -> EvaluationResult:
    """Score every held-out child against the trained pipeline.

    Positions are the nominator's ranks; when filtering is on, a nominee
    removed by the filter can no longer contribute a hit but surviving
    nominees keep their original ranks.
    """
    from .nominate import knn_query
    from .rerank import filter_nominees

    records = []
    total_list_length = 0
    for child_id, parent_id in split.test_pairs:
        processed = pipeline.processed[child_id]
        vector = pipeline.vectorize(processed)
        nominees = knn_query(pipeline.index, pipeline.cache, vector, k)
        ranks = {nom.report_id: pos for pos, nom in enumerate(nominees, start=1)}
        if with_filter and pipeline.classifier is not None:
            outcome = filter_nominees(pipeline.classifier, processed, nominees,
                                      pipeline.processed, pipeline.space)
            nominees = outcome.nominations
        total_list_length += len(nominees)

        hit = next((nom for nom in nominees if nom.report_id == parent_id), None)
        if hit is None:
            records.append(EvaluationRecord(child_id, parent_id, NOT_FOUND))
        else:
            records.append(EvaluationRecord(child_id, parent_id,
                                            ranks[hit.report_id], hit.similarity))

    hist = position_histogram(records, k)
    return EvaluationResult(
        records=records,
        histogram=hist,
        recall={n: recall_at_n(records, n) for n in range(1, k + 1)},
        curve=cumulative_curve(hist),
        similarity_bins=similarity_distribution(records, bin_width),
        mean_list_length=total_list_length / len(records) if records else 0.0,
    )


def result_to_json(result: EvaluationResult, dataset: str, k: int,
                   with_filter: bool) -> dict:
    return {
        "dataset": dataset,
        "k": k,
        "with_filter": with_filter,
        "total": result.histogram.total,
        "counts": {str(pos): c for pos, c in sorted(result.histogram.counts.items())},
        "recall": {str(n): result.recall[n] for n in sorted(result.recall)},
        "similarity_bins": {f"{lo}-{hi}": c
                            for (lo, hi), c in sorted(result.similarity_bins.items())},
        "curve": [[pos, c] for pos, c in result.curve],
        "mean_list_length": result.mean_list_length,
    }
