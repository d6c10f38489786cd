"""Weighted heterogeneous vectorization: TF-IDF text blocks, one-hot component,
dictionary-vectorized platform, concatenated into one sparse vector per report."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

DEFAULT_WEIGHTS = (0.45, 0.25, 0.25, 0.05)  # summary, description, component, platform
UNKNOWN_COMPONENT = "__UNKNOWN__"
PAIR_TEXT_MAX_TOKENS = 512


@dataclass(frozen=True)
class SparseVector:
    dimension: int
    entries: tuple  # ((column, value), ...) strictly increasing columns, no zeros

    def __post_init__(self):
        cols = [c for c, _ in self.entries]
        if cols != sorted(set(cols)):
            raise ValueError("columns must be strictly increasing")
        if cols and cols[-1] >= self.dimension:
            raise ValueError("column exceeds dimension")
        if any(v == 0 for _, v in self.entries):
            raise ValueError("stored zeros are not allowed")

    @classmethod
    def from_dict(cls, dimension, values):
        items = tuple(sorted((c, v) for c, v in values.items() if v != 0))
        return cls(dimension, items)

    def to_dict(self):
        return dict(self.entries)

    def norm(self):
        return math.sqrt(sum(v * v for _, v in self.entries))

    def scale(self, factor):
        if factor == 0:
            return SparseVector(self.dimension, ())
        return SparseVector(self.dimension, tuple((c, v * factor) for c, v in self.entries))

    def dot(self, other):
        if self.dimension != other.dimension:
            raise ValueError("dimension mismatch")
        d = dict(self.entries)
        return sum(v * d[c] for c, v in other.entries if c in d)


def l2_normalize(vec: SparseVector) -> SparseVector:
    n = vec.norm()
    return vec if n == 0 else vec.scale(1.0 / n)


def concat_vectors(blocks):
    """Concatenate sparse blocks into one vector over disjoint column ranges."""
    entries = []
    offset = 0
    for block in blocks:
        entries.extend((offset + c, v) for c, v in block.entries)
        offset += block.dimension
    return SparseVector(offset, tuple(entries))


@dataclass
class TfidfModel:
    vocabulary: dict  # term -> column
    idf: list         # column -> smoothed idf weight
    n_docs: int

    @classmethod
    def fit(cls, documents):
        """Fit vocabulary and smoothed idf: ln((1+N)/(1+df)) + 1."""
        df = Counter()
        n_docs = 0
        for tokens in documents:
            n_docs += 1
            df.update(set(tokens))
        vocabulary = {term: col for col, term in enumerate(sorted(df))}
        idf = [0.0] * len(vocabulary)
        for term, col in vocabulary.items():
            idf[col] = math.log((1 + n_docs) / (1 + df[term])) + 1.0
        return cls(vocabulary=vocabulary, idf=idf, n_docs=n_docs)

    def transform(self, tokens) -> SparseVector:
        """Raw tf x idf over in-vocabulary terms, L2-normalized when nonzero."""
        counts = Counter(tokens)
        values = {
            self.vocabulary[t]: n * self.idf[self.vocabulary[t]]
            for t, n in counts.items()
            if t in self.vocabulary
        }
        return l2_normalize(SparseVector.from_dict(len(self.vocabulary), values))


def tfidf_transform(model: TfidfModel, tokens) -> SparseVector:
    return model.transform(tokens)


def _parse_number(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


class FeatureSpace:
    """Fitted per-block encoders plus block weights.

    Block order in the concatenated space: summary, description, component,
    platform. Each block is L2-normalized then scaled by its weight, so the
    full-vector squared norm is the sum of squared weights of nonzero blocks.
    """

    def __init__(self, summary_model, description_model, component_categories,
                 platform_pair_columns, platform_numeric_columns, weights):
        self.summary_model = summary_model
        self.description_model = description_model
        self.component_categories = component_categories  # label -> column
        self.platform_pair_columns = platform_pair_columns  # (key, value) -> column
        self.platform_numeric_columns = platform_numeric_columns  # key -> column
        self.weights = tuple(weights)

    @property
    def platform_dimension(self):
        return len(self.platform_pair_columns) + len(self.platform_numeric_columns)

    @property
    def dimension(self):
        return (len(self.summary_model.vocabulary)
                + len(self.description_model.vocabulary)
                + len(self.component_categories)
                + self.platform_dimension)


def validate_weights(weights):
    weights = tuple(float(w) for w in weights)
    if len(weights) != 4 or any(w < 0 for w in weights):
        raise ValueError("weights must be four nonnegative reals")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {sum(weights)}")
    return weights


def fit_feature_space(reports, weights=DEFAULT_WEIGHTS) -> FeatureSpace:
    """Fit all block encoders on the training reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot fit a feature space on an empty corpus")
    weights = validate_weights(weights)

    summary_model = TfidfModel.fit(r.doc_summary for r in reports)
    description_model = TfidfModel.fit(r.doc_description for r in reports)

    labels = sorted({r.component for r in reports})
    component_categories = {label: col for col, label in enumerate(labels)}
    component_categories.setdefault(UNKNOWN_COMPONENT, len(component_categories))

    numeric_keys = set()
    pairs = set()
    for r in reports:
        for key, value in r.platform.items():
            if _parse_number(value) is not None:
                numeric_keys.add(key)
            else:
                pairs.add((key, value))
    platform_pair_columns = {pair: col for col, pair in enumerate(sorted(pairs))}
    platform_numeric_columns = {
        key: len(platform_pair_columns) + i for i, key in enumerate(sorted(numeric_keys))
    }

    return FeatureSpace(summary_model, description_model, component_categories,
                        platform_pair_columns, platform_numeric_columns, weights)


def encode_onehot(space: FeatureSpace, component) -> SparseVector:
    col = space.component_categories.get(component,
                                         space.component_categories[UNKNOWN_COMPONENT])
    return SparseVector(len(space.component_categories), ((col, 1.0),))


def encode_platform(space: FeatureSpace, platform) -> SparseVector:
    values = {}
    for key, value in platform.items():
        number = _parse_number(value)
        if number is not None and key in space.platform_numeric_columns:
            values[space.platform_numeric_columns[key]] = number
        elif (key, value) in space.platform_pair_columns:
            values[space.platform_pair_columns[(key, value)]] = 1.0
    return l2_normalize(SparseVector.from_dict(space.platform_dimension, values))


def assemble_vector(space: FeatureSpace, report) -> SparseVector:
    """Concatenate the four weighted L2-normalized blocks into one vector."""
    ws, wd, wc, wp = space.weights
    blocks = [
        space.summary_model.transform(report.doc_summary).scale(ws),
        space.description_model.transform(report.doc_description).scale(wd),
        encode_onehot(space, report.component).scale(wc),
        encode_platform(space, report.platform).scale(wp),
    ]
    return concat_vectors(blocks)


def pair_text(a, b):
    """Build the two concatenated text sides for a report pair.

    Each side is the full document (summary, description, component, sorted
    platform pairs) truncated to 512 tokens, matching the encoder input limit.
    """
    def side(report):
        tokens = list(report.doc_summary) + list(report.doc_description)
        tokens.append(report.component)
        tokens.extend(f"{k}={report.platform[k]}" for k in sorted(report.platform))
        return " ".join(tokens[:PAIR_TEXT_MAX_TOKENS])

    return side(a), side(b)


def feature_space_to_json(space: FeatureSpace) -> dict:
    return {
        "version": 1,
        "weights": list(space.weights),
        "summary": {
            "vocabulary": space.summary_model.vocabulary,
            "idf": space.summary_model.idf,
            "n_docs": space.summary_model.n_docs,
        },
        "description": {
            "vocabulary": space.description_model.vocabulary,
            "idf": space.description_model.idf,
            "n_docs": space.description_model.n_docs,
        },
        "component_categories": space.component_categories,
        "platform_pairs": [[k, v, col] for (k, v), col in
                           sorted(space.platform_pair_columns.items())],
        "platform_numeric": space.platform_numeric_columns,
    }


def feature_space_from_json(data: dict) -> FeatureSpace:
    def model(block):
        return TfidfModel(vocabulary=dict(block["vocabulary"]),
                          idf=list(block["idf"]), n_docs=block["n_docs"])

    return FeatureSpace(
        summary_model=model(data["summary"]),
        description_model=model(data["description"]),
        component_categories=dict(data["component_categories"]),
        platform_pair_columns={(k, v): col for k, v, col in data["platform_pairs"]},
        platform_numeric_columns=dict(data["platform_numeric"]),
        weights=tuple(data["weights"]),
    )
