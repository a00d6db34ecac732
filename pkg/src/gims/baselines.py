"""Reference graph constructions used for comparison with adaptive construction."""

from __future__ import annotations

import numpy as np

from .core import Graph
from .spatial import KdTree

BASELINE_KINDS = ("delaunay", "epsilon", "knn", "mst", "complete")


def _circumcircles(P, tris):
    a, b, c = P[tris[:, 0]], P[tris[:, 1]], P[tris[:, 2]]
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1]) + c[:, 0] * (a[:, 1] - b[:, 1]))
    a2, b2, c2 = (a ** 2).sum(1), (b ** 2).sum(1), (c ** 2).sum(1)
    ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
    uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    cc = np.stack([ux, uy], axis=1)
    r2 = ((a - cc) ** 2).sum(1)
    return cc, r2


def _is_degenerate(pts: np.ndarray) -> bool:
    if len(pts) < 3:
        return True
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[1] <= 1e-12 * max(s[0], 1e-300)


def delaunay_triangles(points, jitter: float = 1e-9, seed: int = 0) -> np.ndarray:
    """Bowyer-Watson triangulation; returns an ``(T, 3)`` array of vertex ids.

    A tiny deterministic jitter (relative to the point spread) breaks cocircular
    ties; the returned triangles refer to the original points.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if _is_degenerate(pts):
        raise ValueError("delaunay needs at least 3 non-collinear points")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    center = (lo + hi) / 2
    rng = np.random.default_rng(seed)
    work = (pts - center) / span + jitter * rng.standard_normal(pts.shape)
    big = 64.0
    super_pts = np.array([[-big, -big], [big, -big], [0.0, big]])
    P = np.vstack([work, super_pts])

    cap = 8 * n + 16
    tris = np.zeros((cap, 3), dtype=np.int64)
    cc = np.zeros((cap, 2))
    r2 = np.zeros(cap)
    alive = np.zeros(cap, dtype=bool)
    tris[0] = (n, n + 1, n + 2)
    cc[:1], r2[:1] = _circumcircles(P, tris[:1])
    alive[0] = True
    used = 1

    for i in range(n):
        p = P[i]
        live = np.flatnonzero(alive[:used])
        dd = ((cc[live] - p) ** 2).sum(1)
        bad = live[dd < r2[live]]
        if len(bad) == 0:
            continue
        edges = np.concatenate([tris[bad][:, [0, 1]], tris[bad][:, [1, 2]], tris[bad][:, [2, 0]]])
        key = np.sort(edges, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        boundary = edges[counts[inv.reshape(-1)] == 1]
        alive[bad] = False
        k = len(boundary)
        if used + k > cap:
            keep = np.flatnonzero(alive[:used])
            m = len(keep)
            cap = max(cap, 2 * (m + k))
            tris = np.concatenate([tris[keep], np.zeros((cap - m, 3), np.int64)])
            cc = np.concatenate([cc[keep], np.zeros((cap - m, 2))])
            r2 = np.concatenate([r2[keep], np.zeros(cap - m)])
            alive = np.concatenate([np.ones(m, bool), np.zeros(cap - m, bool)])
            used = m
        new = np.column_stack([boundary, np.full(k, i)])
        tris[used:used + k] = new
        cc[used:used + k], r2[used:used + k] = _circumcircles(P, new)
        alive[used:used + k] = True
        used += k

    out = tris[:used][alive[:used]]
    out = out[(out < n).all(axis=1)]
    return out


def delaunay_graph(points) -> Graph:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    tris = delaunay_triangles(pts)
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [0, 2]]])
    return Graph.from_edges(len(pts), e, pts)


def epsilon_graph(points, eps: float) -> Graph:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not eps > 0:
        raise ValueError("epsilon must be > 0")
    return Graph(len(pts), KdTree(pts).pairs_within_radius(eps), pts)


def knn_graph(points, k: int) -> Graph:
    """Union of each vertex's k nearest neighbours (ties to the smaller id)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, n - 1)
    if k <= 0:
        return Graph(n, np.zeros((0, 2), np.int64), pts)
    edges = []
    ids = np.arange(n)
    for start in range(0, n, 512):
        block = pts[start:start + 512]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        rows = np.arange(len(block))
        d2[rows, start + rows] = np.inf
        for r in rows:
            nb = np.lexsort((ids, d2[r]))[:k]
            edges.extend((start + r, int(j)) for j in nb)
    return Graph.from_edges(n, edges, pts)


def mst_graph(points) -> Graph:
    """Euclidean minimum spanning tree by Prim's algorithm on the dense distance field."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        return Graph(n, np.zeros((0, 2), np.int64), pts)
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    in_tree[0] = True
    best_new = ((pts - pts[0]) ** 2).sum(1)
    better = best_new < best
    best[better], parent[better] = best_new[better], 0
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        edges.append((int(parent[v]), v))
        in_tree[v] = True
        d = ((pts - pts[v]) ** 2).sum(1)
        better = (d < best) & ~in_tree
        best[better], parent[better] = d[better], v
    return Graph.from_edges(n, edges, pts)


def complete_graph(points) -> Graph:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    iu = np.triu_indices(len(pts), k=1)
    return Graph(len(pts), np.stack(iu, axis=1), pts)


def build_baseline(kind: str, positions, param=None) -> Graph:
    if kind == "delaunay":
        return delaunay_graph(positions)
    if kind == "epsilon":
        return epsilon_graph(positions, float(param if param is not None else 15.0))
    if kind == "knn":
        return knn_graph(positions, int(param if param is not None else 4))
    if kind == "mst":
        return mst_graph(positions)
    if kind == "complete":
        return complete_graph(positions)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
