import pytest

from bugdedup.metrics import (
    EvaluationRecord,
    cumulative_curve,
    position_histogram,
    recall_at_n,
    result_to_json,
    run_evaluation,
    similarity_distribution,
)

# published position/count tables the harness must reproduce
PRIVATE = {1: 2332, 2: 482, 3: 219, 4: 157, 5: 158, -1: 1329}   # total 4677
FIREFOX = {1: 3675, 2: 901, 3: 469, 4: 328, 5: 277, -1: 2774}   # total 8424
ECLIPSE = {1: 2466, 2: 535, 3: 295, 4: 209, 5: 159, -1: 1486}   # total 5150


def records_from_counts(counts):
    records = []
    i = 0
    for pos, n in counts.items():
        for _ in range(n):
            sim = None if pos == -1 else 0.9
            records.append(EvaluationRecord(f"c{i}", f"p{i}", pos, sim))
            i += 1
    return records


class TestRecallAtN:
    def test_private_dataset_counts(self):
        records = records_from_counts(PRIVATE)
        assert recall_at_n(records, 5) == pytest.approx(3348 / 4677)
        assert round(100 * recall_at_n(records, 5), 2) == 71.58

    def test_firefox_dataset_counts(self):
        records = records_from_counts(FIREFOX)
        assert recall_at_n(records, 5) == pytest.approx(5650 / 8424)
        assert abs(100 * recall_at_n(records, 5) - 67.07) < 0.05

    def test_all_top_one(self):
        records = [EvaluationRecord(f"c{i}", f"p{i}", 1, 1.0) for i in range(10)]
        assert recall_at_n(records, 1) == 1.0

    def test_nondecreasing_in_n(self):
        records = records_from_counts(ECLIPSE)
        values = [recall_at_n(records, n) for n in range(1, 6)]
        assert values == sorted(values)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            recall_at_n([], 5)


class TestPositionHistogram:
    def test_eclipse_counts(self):
        hist = position_histogram(records_from_counts(ECLIPSE), k=5)
        assert hist.counts == ECLIPSE
        assert hist.total == 5150

    def test_single_record(self):
        hist = position_histogram([EvaluationRecord("c", "p", 3, 0.5)], k=5)
        assert hist.counts == {1: 0, 2: 0, 3: 1, 4: 0, 5: 0, -1: 0}
        assert hist.total == 1

    def test_out_of_range_position(self):
        with pytest.raises(ValueError):
            position_histogram([EvaluationRecord("c", "p", 7, 0.5)], k=5)

    def test_counts_sum_to_total(self):
        hist = position_histogram(records_from_counts(FIREFOX), k=5)
        assert sum(hist.counts.values()) == hist.total


class TestCumulativeCurve:
    def test_private_prefix_sums(self):
        hist = position_histogram(records_from_counts(PRIVATE), k=5)
        assert cumulative_curve(hist) == [(1, 2332), (2, 2814), (3, 3033),
                                          (4, 3190), (5, 3348)]

    def test_all_zeros(self):
        hist = position_histogram([EvaluationRecord("c", "p", -1)], k=3)
        assert cumulative_curve(hist) == [(1, 0), (2, 0), (3, 0)]

    def test_final_value_over_total_is_recall_at_k(self):
        records = records_from_counts(ECLIPSE)
        hist = position_histogram(records, k=5)
        curve = cumulative_curve(hist)
        assert curve[-1][1] / hist.total == pytest.approx(recall_at_n(records, 5))


class TestSimilarityDistribution:
    def test_high_similarities_in_top_bin(self):
        records = [EvaluationRecord("a", "p", 1, 0.95),
                   EvaluationRecord("b", "p", 2, 0.97)]
        bins = similarity_distribution(records, 0.1)
        assert bins[(0.9, 1.0)] == 2

    def test_no_found_records(self):
        bins = similarity_distribution([EvaluationRecord("a", "p", -1)], 0.1)
        assert sum(bins.values()) == 0

    def test_totals_match_found_count(self):
        records = records_from_counts(PRIVATE)
        bins = similarity_distribution(records, 0.25)
        assert sum(bins.values()) == 4677 - 1329

    def test_bad_bin_width(self):
        with pytest.raises(ValueError):
            similarity_distribution([], 0.0)


class TestEvaluationRecord:
    def test_similarity_presence_tied_to_found(self):
        with pytest.raises(ValueError):
            EvaluationRecord("c", "p", -1, 0.5)
        with pytest.raises(ValueError):
            EvaluationRecord("c", "p", 2, None)


@pytest.fixture(scope="module")
def trained(synthetic_corpus):
    from bugdedup.config import Config
    from bugdedup.corpus import split_train_test
    from bugdedup.pipeline import train
    split = split_train_test(synthetic_corpus, 0.8, seed=1)
    pipeline, _ = train(synthetic_corpus, split, Config())
    return split, pipeline


class TestRunEvaluation:
    def test_permuted_copies_found(self, trained):
        # TF-IDF bags are permutation-invariant, so children built by token
        # permutation plus light dropout must retrieve their parents
        split, pipeline = trained
        result = run_evaluation(split, pipeline, k=5, with_filter=False)
        assert result.recall[5] >= 0.9

    def test_filter_never_raises_recall(self, trained):
        split, pipeline = trained
        plain = run_evaluation(split, pipeline, k=5, with_filter=False)
        filtered = run_evaluation(split, pipeline, k=5, with_filter=True)
        assert filtered.recall[5] <= plain.recall[5]
        for n in range(1, 6):
            assert filtered.histogram.counts[n] <= plain.histogram.counts[n]

    def test_absent_parents_all_not_found(self, synthetic_corpus):
        from bugdedup.config import Config
        from bugdedup.corpus import SplitSpec, split_train_test
        from bugdedup.pipeline import train
        split = split_train_test(synthetic_corpus, 0.8, seed=1)
        pipeline, _ = train(synthetic_corpus, split, Config())
        bogus = SplitSpec(train_ids=split.train_ids,
                          test_pairs=[(c, "no-such-parent") for c, _ in split.test_pairs])
        result = run_evaluation(bogus, pipeline, k=5, with_filter=False)
        assert result.recall[5] == 0.0
        assert result.histogram.counts[-1] == len(bogus.test_pairs)

    def test_report_json_shape(self, trained):
        split, pipeline = trained
        result = run_evaluation(split, pipeline, k=5, with_filter=False)
        report = result_to_json(result, "synthetic", 5, False)
        assert report["total"] == len(split.test_pairs)
        assert set(report["recall"]) == {"1", "2", "3", "4", "5"}
        assert report["counts"]["-1"] == result.histogram.counts[-1]
