"""
Exact k-nearest-neighbour radius R_n(x) with an immutable kd-tree.

R_n(x) is the k-th order statistic of the Euclidean distances |X_i - x| (closed
ball convention); ties in distance are broken by ascending sample index. Squared
distances are accumulated coordinate by coordinate in the same order by the tree
and by the brute-force oracle, so both see bit-identical values.
"""
import heapq
import math
from typing import List, Tuple

import numpy as np

from knnlab.constant import DEFAULT_LEAF_SIZE
from knnlab.entity.artifact_entity import RadiusResult
from knnlab.entity.sample_set import SampleSet
from knnlab.exception import DegenerateRadius, DimensionMismatch, InvalidData, NotEnoughPoints
from knnlab.logger import logging


def squared_distances(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = points[:, 0] - x[0]
    d2 = diff * diff
    for j in range(1, points.shape[1]):
        diff = points[:, j] - x[j]
        d2 = d2 + diff * diff
    return d2


def _as_query(x, p: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p:
        raise DimensionMismatch(f"query has dimension {x.shape[0]}, data has dimension {p}")
    if not np.all(np.isfinite(x)):
        raise InvalidData("query point must be finite")
    return x


def _check_k(k: int, n: int):
    if k > n:
        raise NotEnoughPoints(f"k={k} exceeds the sample size n={n}")
    if k < 1:
        raise NotEnoughPoints(f"k must be at least 1, got {k}")


def _radius_result(d2: np.ndarray, ids: np.ndarray) -> RadiusResult:
    radius = math.sqrt(float(d2[-1]))
    ids = np.asarray(ids, dtype=np.int64)
    ids.setflags(write=False)
    if radius == 0.0:
        raise DegenerateRadius(f"query coincides with at least {ids.shape[0]} sample points", radius=0.0)
    return RadiusResult(radius=radius, neighbor_ids=ids)


class NeighborIndex:
    """
    Balanced kd-tree over the rows of a SampleSet.

    Nodes split the widest coordinate at the median of the (coordinate, index)
    order; leaves hold at most `leaf_size` points. Every node keeps a tight
    bounding box used to prune subtrees that cannot improve the current k-th
    candidate.
    """

    def __init__(self, data: SampleSet, leaf_size: int = DEFAULT_LEAF_SIZE):
        if int(leaf_size) < 1:
            raise InvalidData(f"leaf_size must be >= 1, got {leaf_size}")
        self.source = data
        self.leaf_size = int(leaf_size)
        self._build()

    def _build(self):
        X = self.source.X
        order = np.arange(self.source.n)
        starts: List[int] = []
        ends: List[int] = []
        lefts: List[int] = []
        rights: List[int] = []
        lows: List[np.ndarray] = []
        highs: List[np.ndarray] = []

        def new_node(start: int, end: int) -> int:
            block = X[order[start:end]]
            starts.append(start)
            ends.append(end)
            lefts.append(-1)
            rights.append(-1)
            lows.append(block.min(axis=0))
            highs.append(block.max(axis=0))
            return len(starts) - 1

        stack = [new_node(0, self.source.n)]
        while stack:
            node = stack.pop()
            start, end = starts[node], ends[node]
            if end - start <= self.leaf_size:
                continue
            dim = int(np.argmax(highs[node] - lows[node]))
            members = order[start:end]
            order[start:end] = members[np.lexsort((members, X[members, dim]))]
            middle = start + (end - start) // 2
            lefts[node] = new_node(start, middle)
            rights[node] = new_node(middle, end)
            stack.extend((rights[node], lefts[node]))

        self._order = order
        self._points = np.ascontiguousarray(X[order])
        self._start = np.array(starts)
        self._end = np.array(ends)
        self._left = np.array(lefts)
        self._right = np.array(rights)
        self._low = np.array(lows)
        self._high = np.array(highs)
        for array in (self._order, self._points, self._start, self._end,
                      self._left, self._right, self._low, self._high):
            array.setflags(write=False)

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def node_count(self) -> int:
        return self._start.shape[0]

    def _box_distance(self, node: int, x: np.ndarray) -> float:
        gap = np.maximum(np.maximum(self._low[node] - x, x - self._high[node]), 0.0)
        return float(np.sum(gap * gap))

    def query(self, x, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """Squared distances and ids of the k nearest points in (distance, index) order."""
        x = _as_query(x, self.p)
        _check_k(k, self.n)
        heap: List[Tuple[float, int]] = []
        stack = [(0.0, 0)]
        while stack:
            bound, node = stack.pop()
            if len(heap) == k and bound > -heap[0][0]:
                continue
            left = self._left[node]
            if left < 0:
                start, end = self._start[node], self._end[node]
                d2 = squared_distances(self._points[start:end], x)
                ids = self._order[start:end]
                if len(heap) == k:
                    keep = d2 <= -heap[0][0]
                    d2, ids = d2[keep], ids[keep]
                for distance, index in zip(d2.tolist(), ids.tolist()):
                    if len(heap) < k:
                        heapq.heappush(heap, (-distance, -index))
                    elif (distance, index) < (-heap[0][0], -heap[0][1]):
                        heapq.heapreplace(heap, (-distance, -index))
                continue
            right = self._right[node]
            left_bound = self._box_distance(left, x)
            right_bound = self._box_distance(right, x)
            # nearer child is popped first
            if left_bound <= right_bound:
                stack.append((right_bound, right))
                stack.append((left_bound, left))
            else:
                stack.append((left_bound, left))
                stack.append((right_bound, right))
        found = sorted((-distance, -index) for distance, index in heap)
        return (np.array([d for d, _ in found], dtype=float),
                np.array([i for _, i in found], dtype=np.int64))

    def __repr__(self) -> str:
        return f"NeighborIndex(n={self.n}, p={self.p}, leaf_size={self.leaf_size}, nodes={self.node_count})"


def build_index(data: SampleSet, leaf_size: int = DEFAULT_LEAF_SIZE) -> NeighborIndex:
    index = NeighborIndex(data, leaf_size=leaf_size)
    logging.info(f"Built {index}")
    return index


def knn_radius(index: NeighborIndex, x, k: int) -> RadiusResult:
    d2, ids = index.query(x, k)
    return _radius_result(d2, ids)


def bruteforce_query(data: SampleSet, x, k: int) -> Tuple[np.ndarray, np.ndarray]:
    x = _as_query(x, data.p)
    _check_k(k, data.n)
    d2 = squared_distances(data.X, x)
    kth = np.partition(d2, k - 1)[k - 1]
    candidates = np.flatnonzero(d2 <= kth)
    chosen = candidates[np.lexsort((candidates, d2[candidates]))][:k]
    return d2[chosen], chosen


def knn_radius_bruteforce(data: SampleSet, x, k: int) -> RadiusResult:
    d2, ids = bruteforce_query(data, x, k)
    return _radius_result(d2, ids)


def knn_radius_many(index: NeighborIndex, points, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Radii (m,) and neighbour ids (m, k) for a batch of queries. Zero radii are
    returned as they are; callers decide how to treat them.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.empty(points.shape[0])
    ids = np.empty((points.shape[0], k), dtype=np.int64)
    for row, x in enumerate(points):
        d2, neighbours = index.query(x, k)
        radii[row] = math.sqrt(float(d2[-1]))
        ids[row] = neighbours
    return radii, ids
