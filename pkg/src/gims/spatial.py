"""2-D KD-tree over keypoint positions.

Nodes are stored in flat arrays. Each node owns a contiguous slice of the
permuted index array; interior nodes split that slice at the exact median
along an axis that alternates with depth.
"""

from __future__ import annotations

import numpy as np


class KdTree:
    def __init__(self, points, leaf_size: int = 16):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("KdTree points must be finite")
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        self.points = pts
        self.n = len(pts)
        self.leaf_size = leaf_size
        self.order = np.arange(self.n)
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._axis: list[int] = []
        self._split: list[float] = []
        self._depth: list[int] = []
        if self.n:
            self._build()
        self._bmin = np.array([self.points[self.order[lo:hi]].min(axis=0) for lo, hi in zip(self._lo, self._hi)])
        self._bmax = np.array([self.points[self.order[lo:hi]].max(axis=0) for lo, hi in zip(self._lo, self._hi)])

    def _new_node(self, lo, hi, depth):
        self._lo.append(lo)
        self._hi.append(hi)
        self._left.append(-1)
        self._right.append(-1)
        self._axis.append(depth % 2)
        self._split.append(np.nan)
        self._depth.append(depth)
        return len(self._lo) - 1

    def _build(self):
        stack = [self._new_node(0, self.n, 0)]
        while stack:
            node = stack.pop()
            lo, hi = self._lo[node], self._hi[node]
            if hi - lo <= self.leaf_size:
                continue
            axis = self._axis[node]
            mid = (lo + hi) // 2
            idx = self.order[lo:hi]
            coords = self.points[idx, axis]
            part = np.argpartition(coords, mid - lo, kind="introselect")
            idx = idx[part]
            self.order[lo:hi] = idx
            self._split[node] = float(self.points[self.order[mid], axis])
            depth = self._depth[node] + 1
            left = self._new_node(lo, mid, depth)
            right = self._new_node(mid, hi, depth)
            self._left[node] = left
            self._right[node] = right
            stack.extend((right, left))

    @property
    def num_nodes(self) -> int:
        return len(self._lo)

    def height(self) -> int:
        """Number of nodes on the longest root-to-leaf path (0 for an empty tree)."""
        return max(self._depth) + 1 if self._depth else 0

    def is_leaf(self, node: int) -> bool:
        return self._left[node] < 0

    def check_partition(self) -> bool:
        """Verify every interior node's split plane separates its children."""
        for node in range(self.num_nodes):
            if self.is_leaf(node):
                continue
            ax, s = self._axis[node], self._split[node]
            l, r = self._left[node], self._right[node]
            lpts = self.points[self.order[self._lo[l]:self._hi[l]], ax]
            rpts = self.points[self.order[self._lo[r]:self._hi[r]], ax]
            if lpts.max() > s or rpts.min() < s:
                return False
        return sorted(self.order.tolist()) == list(range(self.n))

    def _box_gap2(self, a: int, b: int) -> float:
        gap = np.maximum(0.0, np.maximum(self._bmin[a] - self._bmax[b], self._bmin[b] - self._bmax[a]))
        return float(gap @ gap)

    def _point_gap2(self, p: np.ndarray, node: int) -> float:
        gap = np.maximum(0.0, np.maximum(self._bmin[node] - p, p - self._bmax[node]))
        return float(gap @ gap)

    def pairs_within_radius(self, radius: float) -> np.ndarray:
        """All index pairs ``(i, j)``, ``i < j``, with distance strictly below ``radius``.

        Returns a lexicographically sorted ``(k, 2)`` int array.
        """
        if radius <= 0:
            raise ValueError("radius must be positive")
        if self.n < 2:
            return np.zeros((0, 2), dtype=np.int64)
        r2 = radius * radius
        found_i: list[np.ndarray] = []
        found_j: list[np.ndarray] = []
        stack = [(0, 0)]
        while stack:
            a, b = stack.pop()
            if a != b and self._box_gap2(a, b) >= r2:
                continue
            leaf_a, leaf_b = self.is_leaf(a), self.is_leaf(b)
            if leaf_a and leaf_b:
                ia = self.order[self._lo[a]:self._hi[a]]
                ib = self.order[self._lo[b]:self._hi[b]]
                diff = self.points[ia][:, None, :] - self.points[ib][None, :, :]
                d2 = np.einsum("ijk,ijk->ij", diff, diff)
                mask = d2 < r2
                if a == b:
                    mask &= ia[:, None] < ib[None, :]
                ra, rb = np.nonzero(mask)
                if len(ra):
                    found_i.append(ia[ra])
                    found_j.append(ib[rb])
            elif a == b:
                l, r = self._left[a], self._right[a]
                stack.extend(((l, l), (l, r), (r, r)))
            else:
                size_a = self._hi[a] - self._lo[a]
                size_b = self._hi[b] - self._lo[b]
                if leaf_b or (not leaf_a and size_a >= size_b):
                    stack.extend(((self._left[a], b), (self._right[a], b)))
                else:
                    stack.extend(((a, self._left[b]), (a, self._right[b])))
        if not found_i:
            return np.zeros((0, 2), dtype=np.int64)
        i = np.concatenate(found_i)
        j = np.concatenate(found_j)
        pairs = np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]

    def query(self, point, exclude: int | None = None) -> tuple[int, float]:
        """Nearest tree point to ``point``; distance ties go to the smaller index.

        Returns ``(index, distance)``; ``(-1, inf)`` if no candidate exists.
        """
        p = np.asarray(point, dtype=np.float64)
        best_i, best_d2 = -1, np.inf
        if self.n == 0:
            return best_i, np.inf
        stack = [0]
        while stack:
            node = stack.pop()
            # equal gap must still be visited: it may hold a tie with a smaller index
            if self._point_gap2(p, node) > best_d2:
                continue
            if self.is_leaf(node):
                ids = self.order[self._lo[node]:self._hi[node]]
                diff = self.points[ids] - p
                d2 = np.einsum("ij,ij->i", diff, diff)
                if exclude is not None:
                    d2 = np.where(ids == exclude, np.inf, d2)
                k = np.lexsort((ids, d2))[0]
                if d2[k] < best_d2 or (d2[k] == best_d2 and ids[k] < best_i):
                    best_i, best_d2 = int(ids[k]), float(d2[k])
                continue
            l, r = self._left[node], self._right[node]
            # descend into the nearer child first
            if self._point_gap2(p, l) <= self._point_gap2(p, r):
                stack.extend((r, l))
            else:
                stack.extend((l, r))
        return best_i, float(np.sqrt(best_d2))

    def nearest_neighbor(self, query_index: int) -> int:
        """Index of the nearest other point to ``points[query_index]``."""
        if self.n < 2:
            raise ValueError("nearest_neighbor needs at least two points")
        return self.query(self.points[query_index], exclude=query_index)[0]


def build(points, leaf_size: int = 16) -> KdTree:
    return KdTree(points, leaf_size=leaf_size)


def pairs_within_radius(tree: KdTree, radius: float) -> np.ndarray:
    return tree.pairs_within_radius(radius)


def nearest_neighbor(tree: KdTree, query_index: int) -> int:
    return tree.nearest_neighbor(query_index)
