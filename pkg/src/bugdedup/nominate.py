"""Exact k-nearest-neighbor retrieval over weighted report vectors.

Algorithm is picked from data statistics (brute force, KD tree, or ball
tree); all three answer queries identically. A bounded cache of recently
submitted unique reports is scanned alongside the index so results are
current up to the latest report.
"""

from __future__ import annotations

import heapq
import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy import sparse as sp

from .vectorize import SparseVector

LEAF_SIZE = 32

# Auto-selection thresholds; tree construction only pays off on larger,
# low-dimensional dense data.
DEFAULT_BRUTE_MAX_SAMPLES = 1000
DEFAULT_KD_MAX_FEATURES = 20
DEFAULT_BALL_MAX_FEATURES = 100


@dataclass(frozen=True)
class AlgorithmChoice:
    name: str  # brute | kd_tree | ball_tree
    rationale: str

    def __post_init__(self):
        if self.name not in ("brute", "kd_tree", "ball_tree"):
            raise ValueError(f"unknown algorithm {self.name!r}")


@dataclass(frozen=True)
class Nomination:
    report_id: str
    distance: float
    similarity: float


def select_algorithm(n_samples, n_features, sparse, k=5, n_queries=1,
                     brute_max_samples=DEFAULT_BRUTE_MAX_SAMPLES,
                     kd_max_features=DEFAULT_KD_MAX_FEATURES,
                     ball_max_features=DEFAULT_BALL_MAX_FEATURES) -> AlgorithmChoice:
    if min(n_samples, n_features, k, n_queries) <= 0:
        raise ValueError("all counts must be positive")
    if sparse:
        return AlgorithmChoice("brute", "sparse input: trees need dense coordinates")
    if n_samples < brute_max_samples:
        return AlgorithmChoice("brute", f"{n_samples} samples: tree build overhead not worth it")
    if n_features <= kd_max_features:
        return AlgorithmChoice("kd_tree", f"dense, {n_features} features: axis splits effective")
    if n_features <= ball_max_features:
        return AlgorithmChoice("ball_tree", f"dense, {n_features} features: metric balls still prune")
    return AlgorithmChoice("brute", f"{n_features} features: partitioning degenerates")


def euclidean_distance(p: SparseVector, q: SparseVector) -> float:
    if p.dimension != q.dimension:
        raise ValueError(f"dimension mismatch: {p.dimension} vs {q.dimension}")
    pd, qd = p.to_dict(), q.to_dict()
    return math.sqrt(sum((qd.get(c, 0.0) - pd.get(c, 0.0)) ** 2 for c in pd.keys() | qd.keys()))


def similarity(distance: float) -> float:
    """1 - distance, clamped into [0, 1]; identical vectors score 1."""
    if distance < 0:
        raise ValueError(f"negative distance {distance}")
    return min(1.0, max(0.0, 1.0 - distance))


# ---------------------------------------------------------------------------
# Index structures. Rows are identified by position; tie ranks order equal
# distances by report id so all algorithms return identical lists.
# ---------------------------------------------------------------------------

class _BruteRows:
    def __init__(self, matrix: sp.csr_matrix):
        self.matrix = matrix

    def query(self, q: np.ndarray, k: int, tie_rank):
        n = self.matrix.shape[0]
        best = []  # max-heap of (-distance, -tie_rank, row)
        for start in range(0, n, 4096):
            chunk = self.matrix[start:start + 4096].toarray()
            dists = np.sqrt(((chunk - q) ** 2).sum(axis=1))
            for i, d in enumerate(dists):
                row = start + i
                item = (-d, -tie_rank[row], row)
                if len(best) < k:
                    heapq.heappush(best, item)
                elif item > best[0]:
                    heapq.heapreplace(best, item)
        return [(-nd, row) for nd, _, row in sorted(best, reverse=True)]


class _Heap:
    """Bounded worst-out candidate heap ordered by (distance, tie_rank)."""

    def __init__(self, k):
        self.k = k
        self.items = []

    def offer(self, distance, tie_rank, row):
        item = (-distance, -tie_rank, row)
        if len(self.items) < self.k:
            heapq.heappush(self.items, item)
        elif item > self.items[0]:
            heapq.heapreplace(self.items, item)

    def worst_distance(self):
        return -self.items[0][0] if len(self.items) == self.k else math.inf

    def sorted_rows(self):
        return [(-nd, row) for nd, _, row in sorted(self.items, reverse=True)]


class _KDTree:
    """Median-split KD tree; split axis is the coordinate of maximum spread."""

    def __init__(self, points: np.ndarray, leaf_size=LEAF_SIZE):
        self.points = points
        self.root = self._build(np.arange(len(points)), leaf_size)

    def _build(self, rows, leaf_size):
        if len(rows) <= leaf_size:
            return ("leaf", rows)
        pts = self.points[rows]
        axis = int(np.argmax(pts.max(axis=0) - pts.min(axis=0)))
        order = np.argsort(pts[:, axis], kind="stable")
        mid = len(rows) // 2
        threshold = float(pts[order[mid], axis])
        left = self._build(rows[order[:mid]], leaf_size)
        right = self._build(rows[order[mid:]], leaf_size)
        return ("node", axis, threshold, left, right)

    def depth(self, node=None):
        node = self.root if node is None else node
        if node[0] == "leaf":
            return 0
        return 1 + max(self.depth(node[3]), self.depth(node[4]))

    def query(self, q, k, tie_rank):
        heap = _Heap(k)
        self._search(self.root, q, heap, tie_rank)
        return heap.sorted_rows()

    def _search(self, node, q, heap, tie_rank):
        if node[0] == "leaf":
            rows = node[1]
            dists = np.sqrt(((self.points[rows] - q) ** 2).sum(axis=1))
            for row, d in zip(rows, dists):
                heap.offer(float(d), tie_rank[row], int(row))
            return
        _, axis, threshold, left, right = node
        near, far = (left, right) if q[axis] < threshold else (right, left)
        self._search(near, q, heap, tie_rank)
        # the far side can still hold boundary ties, hence <=
        if abs(q[axis] - threshold) <= heap.worst_distance():
            self._search(far, q, heap, tie_rank)


class _BallTree:
    """Centroid-split ball tree: partition along the axis between the two
    mutually farthest seed points, bound each node by its covering ball."""

    def __init__(self, points: np.ndarray, leaf_size=LEAF_SIZE):
        self.points = points
        self.root = self._build(np.arange(len(points)), leaf_size)

    def _build(self, rows, leaf_size):
        pts = self.points[rows]
        center = pts.mean(axis=0)
        radius = float(np.sqrt(((pts - center) ** 2).sum(axis=1)).max()) if len(rows) else 0.0
        if len(rows) <= leaf_size:
            return ("leaf", rows, center, radius)
        seed_a = pts[int(np.argmax(((pts - center) ** 2).sum(axis=1)))]
        seed_b = pts[int(np.argmax(((pts - seed_a) ** 2).sum(axis=1)))]
        direction = seed_b - seed_a
        projection = pts @ direction
        order = np.argsort(projection, kind="stable")
        mid = len(rows) // 2
        left = self._build(rows[order[:mid]], leaf_size)
        right = self._build(rows[order[mid:]], leaf_size)
        return ("node", center, radius, left, right)

    def query(self, q, k, tie_rank):
        heap = _Heap(k)
        self._search(self.root, q, heap, tie_rank)
        return heap.sorted_rows()

    def _search(self, node, q, heap, tie_rank):
        if node[0] == "leaf":
            _, rows, center, radius = node
            if math.sqrt(float(((q - center) ** 2).sum())) - radius > heap.worst_distance():
                return
            dists = np.sqrt(((self.points[rows] - q) ** 2).sum(axis=1))
            for row, d in zip(rows, dists):
                heap.offer(float(d), tie_rank[row], int(row))
            return
        _, center, radius, left, right = node
        if math.sqrt(float(((q - center) ** 2).sum())) - radius > heap.worst_distance():
            return
        self._search(left, q, heap, tie_rank)
        self._search(right, q, heap, tie_rank)


class RecentCache:
    """Bounded append buffer of freshly submitted unique reports.

    Oldest entries are evicted first. Cached ids stay disjoint from the
    index; the cache is scanned brute-force on every query.
    """

    def __init__(self, capacity=1024):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.entries = OrderedDict()  # id -> SparseVector

    def __len__(self):
        return len(self.entries)

    def __contains__(self, report_id):
        return report_id in self.entries


class NeighborIndex:
    """Immutable exact k-NN structure over the training vectors.

    Only roots and uniques are indexed; reports carrying a dup_of link are
    excluded so every nomination is a findable original.
    """

    def __init__(self, vectors, ids, choice, structure, tie_rank):
        self.vectors = list(vectors)
        self.ids = list(ids)
        self.algorithm = choice
        self._structure = structure
        self._tie_rank = tie_rank
        self.dimension = self.vectors[0].dimension

    def __len__(self):
        return len(self.ids)


def _to_csr(vectors):
    rows, cols, vals = [], [], []
    for i, vec in enumerate(vectors):
        for c, v in vec.entries:
            rows.append(i)
            cols.append(c)
            vals.append(v)
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(len(vectors), vectors[0].dimension))


def _to_dense(vectors):
    dense = np.zeros((len(vectors), vectors[0].dimension))
    for i, vec in enumerate(vectors):
        for c, v in vec.entries:
            dense[i, c] = v
    return dense


def build_index(vectors, ids, choice="auto", k=5, n_queries=1,
                leaf_size=LEAF_SIZE, **thresholds) -> NeighborIndex:
    vectors, ids = list(vectors), list(ids)
    if not vectors:
        raise ValueError("cannot build an index over no vectors")
    if len(vectors) != len(ids):
        raise ValueError(f"{len(vectors)} vectors but {len(ids)} ids")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    dimension = vectors[0].dimension
    if any(v.dimension != dimension for v in vectors):
        raise ValueError("all vectors must share one dimension")

    if choice == "auto":
        nnz = sum(len(v.entries) for v in vectors)
        is_sparse = nnz < 0.5 * len(vectors) * dimension
        choice = select_algorithm(len(vectors), dimension, is_sparse,
                                  k=k, n_queries=n_queries, **thresholds)
    elif isinstance(choice, str):
        choice = AlgorithmChoice(choice, "caller override")

    # rows tied on distance must come back in report-id order
    tie_rank = {row: rank for rank, row in
                enumerate(sorted(range(len(ids)), key=lambda r: ids[r]))}

    if choice.name == "brute":
        structure = _BruteRows(_to_csr(vectors))
    elif choice.name == "kd_tree":
        structure = _KDTree(_to_dense(vectors), leaf_size)
    else:
        structure = _BallTree(_to_dense(vectors), leaf_size)
    return NeighborIndex(vectors, ids, choice, structure, tie_rank)


def knn_query(index: NeighborIndex, cache, query: SparseVector, k: int):
    """Exact k nearest over index plus cache, ascending distance, ties by id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if query.dimension != index.dimension:
        raise ValueError(f"dimension mismatch: {query.dimension} vs {index.dimension}")

    q_dense = np.zeros(index.dimension)
    for c, v in query.entries:
        q_dense[c] = v
    candidates = [(d, index.ids[row])
                  for d, row in index._structure.query(q_dense, k, index._tie_rank)]
    if cache is not None:
        candidates.extend((euclidean_distance(vec, query), rid)
                          for rid, vec in cache.entries.items())
    candidates.sort(key=lambda item: (item[0], item[1]))
    return [Nomination(rid, d, similarity(d)) for d, rid in candidates[:k]]


def cache_add(cache: RecentCache, report_id, vector, index=None):
    """Append a fresh unique report to the cache, evicting the oldest if full."""
    if report_id in cache.entries or (index is not None and report_id in index.ids):
        raise ValueError(f"id {report_id!r} already indexed or cached")
    cache.entries[report_id] = vector
    while len(cache.entries) > cache.capacity:
        cache.entries.popitem(last=False)
    return cache


def index_to_json(index: NeighborIndex) -> dict:
    return {
        "version": 1,
        "algorithm": index.algorithm.name,
        "rationale": index.algorithm.rationale,
        "dimension": index.dimension,
        "ids": index.ids,
        "vectors": [[[c for c, _ in v.entries], [x for _, x in v.entries]]
                    for v in index.vectors],
    }


def index_from_json(data: dict) -> NeighborIndex:
    vectors = [SparseVector(data["dimension"], tuple(zip(cols, vals)))
               for cols, vals in data["vectors"]]
    return build_index(vectors, data["ids"],
                       AlgorithmChoice(data["algorithm"], data.get("rationale", "restored")))
