"""Adaptive graph construction over keypoints.

Coarse stage: radius-limited candidate pairs filtered by a percentile-adaptive
cosine-similarity threshold. Repair stages: attach isolated vertices to their
nearest neighbour, drop small components, then join the remaining components
through their closest centroids until one component is left.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .core import DescriptorSet, Graph
from .spatial import KdTree

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgcParams:
    beta: float = 15.0
    alpha: float = 2.0
    theta: int = 7

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not 0 <= self.alpha <= 100:
            raise ValueError("alpha must lie in [0, 100]")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


@dataclass(frozen=True)
class SimilarityStats:
    pairs: np.ndarray
    cosines: np.ndarray
    gamma: float | None  # None when there were no candidate pairs


@dataclass
class AgcReport:
    gamma: float | None = None
    num_candidates: int = 0
    coarse_edges: int = 0
    isolated_before_repair: int = 0
    repair_edges: int = 0
    removed_ids: list[int] = field(default_factory=list)
    components_before_fine: int = 0
    min_component_before_fine: int = 0
    fine_edges_added: int = 0
    final_vertices: int = 0
    final_edges: int = 0
    kept_ids: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "num_candidates": self.num_candidates,
            "coarse_edges": self.coarse_edges,
            "isolated_before_repair": self.isolated_before_repair,
            "repair_edges": self.repair_edges,
            "removed_ids": list(self.removed_ids),
            "components_before_fine": self.components_before_fine,
            "fine_edges_added": self.fine_edges_added,
            "final_vertices": self.final_vertices,
            "final_edges": self.final_edges,
            "warnings": list(self.warnings),
        }


def _as_matrix(descriptors) -> np.ndarray:
    if isinstance(descriptors, DescriptorSet):
        return descriptors.data
    return np.asarray(descriptors, dtype=np.float64)


def cosine_similarity(d_i, d_j) -> float:
    a = np.asarray(d_i, dtype=np.float64)
    b = np.asarray(d_j, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def pair_cosines(desc: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Cosine similarity for each row of ``pairs``; zero-norm rows give 0."""
    if len(pairs) == 0:
        return np.zeros(0)
    norms = np.linalg.norm(desc, axis=1)
    i, j = pairs[:, 0], pairs[:, 1]
    dots = np.einsum("ij,ij->i", desc[i], desc[j])
    denom = norms[i] * norms[j]
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(c, -1.0, 1.0)


def percentile_threshold(values, alpha: float) -> float:
    """Linear-interpolated percentile over the ascending sort (0-based ranks)."""
    c = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    k = len(c)
    if k == 0:
        raise ValueError("percentile of an empty list")
    if not 0 <= alpha <= 100:
        raise ValueError("alpha must lie in [0, 100]")
    r = alpha / 100.0 * (k - 1)
    lo = int(np.floor(r))
    frac = r - lo
    if lo + 1 >= k or frac == 0.0:
        return float(c[min(lo, k - 1)])
    return float((1.0 - frac) * c[lo] + frac * c[lo + 1])


def build_coarse(positions, descriptors, params: AgcParams = AgcParams(), *,
                 gamma_scope: str = "candidates", tree: KdTree | None = None) -> tuple[Graph, SimilarityStats]:
    """Edges between radius-limited pairs whose similarity reaches the adaptive threshold.

    ``gamma_scope="all"`` takes the percentile over every vertex pair instead of
    only the radius candidates.
    """
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    desc = _as_matrix(descriptors)
    if len(desc) != len(pos):
        raise ValueError(f"{len(desc)} descriptors for {len(pos)} positions")
    tree = tree if tree is not None else KdTree(pos)
    pairs = tree.pairs_within_radius(params.beta)
    cos = pair_cosines(desc, pairs)
    gamma = None
    if gamma_scope == "candidates":
        if len(cos):
            gamma = percentile_threshold(cos, params.alpha)
    elif gamma_scope == "all":
        if len(pos) >= 2:
            iu = np.triu_indices(len(pos), k=1)
            gamma = percentile_threshold(pair_cosines(desc, np.stack(iu, axis=1)), params.alpha)
    else:
        raise ValueError(f"unknown gamma_scope {gamma_scope!r}")
    keep = cos >= gamma if gamma is not None else np.zeros(len(cos), bool)
    g = Graph(len(pos), pairs[keep], pos)
    return g, SimilarityStats(pairs, cos, gamma)


def component_labels(g: Graph) -> np.ndarray:
    """Label each vertex with the smallest vertex id of its component."""
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    e = g.edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(g.n, g.n))
    _, raw = _cc(adj, directed=False)
    first = np.full(raw.max() + 1, g.n, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(g.n))
    return first[raw]


def connect_isolated(g: Graph, tree: KdTree | None = None, warnings: list | None = None) -> Graph:
    """Give every degree-0 vertex an edge to its spatially nearest vertex.

    Degrees are snapshotted before any repair edge is added.
    """
    if g.positions is None:
        raise ValueError("connect_isolated needs vertex positions")
    deg = g.degrees()
    isolated = np.flatnonzero(deg == 0)
    if len(isolated) == 0:
        return g
    if g.n < 2:
        msg = f"vertex {int(isolated[0])} left isolated: graph has fewer than two vertices"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        return g
    tree = tree if tree is not None else KdTree(g.positions)
    extra = []
    for i in isolated:
        j = tree.nearest_neighbor(int(i))
        extra.append((min(i, j), max(i, j)))
    return Graph.from_edges(g.n, np.concatenate([g.edges, np.array(extra, dtype=np.int64)]), g.positions)


def remove_small(g: Graph, theta: int) -> tuple[Graph, np.ndarray]:
    """Delete components of order < ``theta`` unless that would delete everything.

    Components are visited smallest first and one is removed only while it is
    not the whole remaining graph, so an all-small graph keeps its largest
    component. Returns the re-indexed graph and an old->new id map (-1 = removed).
    """
    labels = component_labels(g)
    comp_ids, sizes = np.unique(labels, return_counts=True)
    remaining = len(comp_ids)
    removed = np.zeros(g.n, dtype=bool)
    # ascending size, larger first-vertex id first among equals
    for k in np.lexsort((-comp_ids, sizes)):
        if sizes[k] < theta and remaining > 1:
            removed[labels == comp_ids[k]] = True
            remaining -= 1
    id_map = np.full(g.n, -1, dtype=np.int64)
    kept = np.flatnonzero(~removed)
    id_map[kept] = np.arange(len(kept))
    if not removed.any():
        return g, id_map
    e = g.edges
    e = e[~removed[e[:, 0]]] if len(e) else e
    pos = g.positions[kept] if g.positions is not None else None
    return Graph(len(kept), id_map[e], pos), id_map


def connect_components(g: Graph) -> Graph:
    """Join components pairwise until the graph is connected.

    Each round recomputes centroids, picks the closest centroid pair and links
    the closest vertex pair across those two components. Distance ties break
    on the smaller component (first-vertex id), then the smaller vertex ids.
    """
    if g.n == 0:
        return g
    if g.positions is None:
        raise ValueError("connect_components needs vertex positions")
    pos = g.positions
    labels = component_labels(g)
    comps = list(np.unique(labels))
    t = len(comps)
    if t <= 1:
        return g
    alive = np.ones(t, dtype=bool)
    cent = np.array([pos[labels == c].mean(axis=0) for c in comps])
    diff = cent[:, None, :] - cent[None, :, :]
    d2 = (diff ** 2).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    new_edges = []
    for _ in range(t - 1):
        a, b = np.unravel_index(np.argmin(d2), d2.shape)
        ca, cb = comps[a], comps[b]
        ma = np.flatnonzero(labels == ca)
        mb = np.flatnonzero(labels == cb)
        vd = pos[ma][:, None, :] - pos[mb][None, :, :]
        vd2 = (vd ** 2).sum(axis=-1)
        u, v = np.unravel_index(np.argmin(vd2), vd2.shape)
        u, v = int(ma[u]), int(mb[v])
        new_edges.append((min(u, v), max(u, v)))
        keep, drop = (a, b) if ca < cb else (b, a)
        ckeep, cdrop = comps[keep], comps[drop]
        labels[labels == cdrop] = ckeep
        alive[drop] = False
        d2[drop, :] = np.inf
        d2[:, drop] = np.inf
        cent[keep] = pos[labels == ckeep].mean(axis=0)
        row = ((cent[keep][None, :] - cent) ** 2).sum(axis=-1)
        row = np.where(alive, row, np.inf)
        row[keep] = np.inf
        d2[keep, :] = row
        d2[:, keep] = row
    return Graph.from_edges(g.n, np.concatenate([g.edges, np.array(new_edges, dtype=np.int64)]), pos)


def build_agc(positions, descriptors, params: AgcParams = AgcParams(), *,
              gamma_scope: str = "candidates") -> tuple[Graph, AgcReport]:
    """Full adaptive construction: coarse, isolated repair, small-component removal, joining."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    report = AgcReport()
    tree = KdTree(pos)
    g, stats = build_coarse(pos, descriptors, params, gamma_scope=gamma_scope, tree=tree)
    report.gamma = stats.gamma
    report.num_candidates = len(stats.pairs)
    report.coarse_edges = g.num_edges
    report.isolated_before_repair = int((g.degrees() == 0).sum())
    g2 = connect_isolated(g, tree, report.warnings)
    report.repair_edges = g2.num_edges - g.num_edges
    g3, id_map = remove_small(g2, params.theta)
    report.removed_ids = np.flatnonzero(id_map < 0).tolist()
    labels = component_labels(g3)
    _, sizes = np.unique(labels, return_counts=True)
    report.components_before_fine = len(sizes)
    report.min_component_before_fine = int(sizes.min()) if len(sizes) else 0
    g4 = connect_components(g3)
    report.fine_edges_added = g4.num_edges - g3.num_edges
    report.final_vertices = g4.n
    report.final_edges = g4.num_edges
    report.kept_ids = np.flatnonzero(id_map >= 0)
    return g4, report


def graph_stats(g: Graph) -> dict:
    deg = g.degrees()
    labels = component_labels(g)
    hist = np.bincount(deg) if g.n else np.zeros(0, dtype=np.int64)
    return {
        "n": int(g.n),
        "edges": int(g.num_edges),
        "components": int(len(np.unique(labels))),
        "isolated": int((deg == 0).sum()),
        "degree_histogram": hist.tolist(),
        "mean_degree": float(deg.mean()) if g.n else 0.0,
    }
