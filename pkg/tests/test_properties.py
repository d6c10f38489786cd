
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugdedup.corpus import BugReport, ReportCollection, resolve_parent, split_train_test
from bugdedup.nominate import Nomination, euclidean_distance, similarity
from bugdedup.preprocess import ProcessedReport, filter_feature_tokens
from bugdedup.rerank import PairClassifier, build_training_pairs, filter_nominees
from bugdedup.vectorize import SparseVector, assemble_vector, fit_feature_space

tokens_st = st.lists(
    st.text(alphabet="abcxyz0123456789._", min_size=1, max_size=8), max_size=20)


@given(tokens_st)
def test_filter_feature_tokens_idempotent(tokens):
    once = filter_feature_tokens(tokens)
    assert filter_feature_tokens(once) == once


def sparse_vector_st(dim=6):
    return st.lists(
        st.tuples(st.integers(0, dim - 1),
                  st.floats(-5, 5, allow_nan=False).filter(lambda x: abs(x) > 1e-6)),
        max_size=dim, unique_by=lambda e: e[0],
    ).map(lambda entries: SparseVector(dim, tuple(sorted(entries))))


@given(sparse_vector_st(), sparse_vector_st())
def test_distance_symmetry(p, q):
    assert euclidean_distance(p, q) == pytest.approx(euclidean_distance(q, p), abs=1e-12)


@given(sparse_vector_st())
def test_distance_to_self_is_zero(p):
    assert euclidean_distance(p, p) == 0.0
    assert similarity(euclidean_distance(p, p)) == 1.0


@given(sparse_vector_st(), sparse_vector_st(), sparse_vector_st())
def test_triangle_inequality(p, q, r):
    assert euclidean_distance(p, r) <= \
        euclidean_distance(p, q) + euclidean_distance(q, r) + 1e-9


# --- corpus-level properties over small random collections -----------------

@st.composite
def collections_st(draw):
    n_originals = draw(st.integers(2, 6))
    n_children = draw(st.integers(1, 6))
    reports = [BugReport(id=f"P{i}", summary="base text")
               for i in range(n_originals)]
    for j in range(n_children):
        target = draw(st.integers(0, n_originals + j - 1))
        parent_id = reports[target].id
        reports.append(BugReport(id=f"C{j}", summary="child text", dup_of=parent_id))
    return ReportCollection(reports)


@settings(max_examples=30)
@given(collections_st(), st.floats(0.1, 0.9), st.integers(0, 99))
def test_split_invariants_hold(collection, fraction, seed):
    split = split_train_test(collection, fraction, seed)
    again = split_train_test(collection, fraction, seed)
    assert split.train_ids == again.train_ids
    assert split.test_pairs == again.test_pairs
    for child, parent in split.test_pairs:
        assert child not in split.train_ids
        assert parent in split.train_ids
        assert child != parent
        assert parent == resolve_parent(collection, child)


@settings(max_examples=30)
@given(collections_st())
def test_resolve_parent_idempotent(collection):
    for report in collection:
        root = resolve_parent(collection, report.id)
        assert resolve_parent(collection, root) == root
        assert collection.get(root).dup_of is None


@settings(max_examples=30)
@given(collections_st(), st.sampled_from([1.0, 2.0, 3.0, 5.0]), st.integers(0, 99))
def test_pairset_ratio_invariant(collection, ratio, seed):
    pairs = build_training_pairs(collection, ratio, seed)
    assert len(pairs.negatives) == int(len(pairs.positives) // ratio)
    children = set(collection.duplicate_children())
    for a, b in pairs.negatives:
        assert a not in children and b not in children


# --- vector-space properties ------------------------------------------------

report_st = st.builds(
    ProcessedReport,
    id=st.just("r"),
    doc_summary=st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]), max_size=6),
    doc_description=st.lists(st.sampled_from(["one", "two", "three"]), max_size=6),
    component=st.sampled_from(["ui", "net", "other"]),
    platform=st.dictionaries(st.sampled_from(["os", "cpus"]),
                             st.sampled_from(["linux", "8"]), max_size=2),
)


@settings(max_examples=60)
@given(st.lists(report_st, min_size=1, max_size=8), report_st)
def test_assembled_norm_is_sum_of_block_weights(fit_reports, query):
    space = fit_feature_space(fit_reports)
    vec = assemble_vector(space, query)
    summary = space.summary_model.transform(query.doc_summary)
    description = space.description_model.transform(query.doc_description)
    from bugdedup.vectorize import encode_onehot, encode_platform
    blocks = [summary, description, encode_onehot(space, query.component),
              encode_platform(space, query.platform)]
    expected = sum(w * w for w, b in zip(space.weights, blocks) if b.entries)
    assert vec.norm() ** 2 == pytest.approx(expected, abs=1e-9)
    for block in blocks:
        if block.entries:
            assert block.norm() == pytest.approx(1.0, abs=1e-9)


# --- filter subsequence property --------------------------------------------

@settings(max_examples=50)
@given(st.lists(st.tuples(st.sampled_from("abcdef"), st.floats(0, 1, allow_nan=False)),
                max_size=8),
       st.floats(-3, 3, allow_nan=False))
def test_filter_output_is_subsequence(entries, bias):
    nominees = [Nomination(f"n{i}-{rid}", 1 - sim, sim)
                for i, (rid, sim) in enumerate(entries)]
    reports = {n.report_id: ProcessedReport(n.report_id, ["tok"], [], "ui", {})
               for n in nominees}
    query = ProcessedReport("q", ["tok"], [], "ui", {})
    space = fit_feature_space(list(reports.values()) + [query])
    # random-bias classifier: arbitrary keep/drop decisions
    clf = PairClassifier(kind="reference_scorer",
                         weights=[1.0, 0.0, 0.0, 0.0, -2.0, 0.5], bias=bias)
    outcome = filter_nominees(clf, query, nominees, reports, space)
    it = iter(nominees)
    assert all(kept in it for kept in outcome.nominations)
    assert len(outcome.nominations) <= len(nominees)
