"""Shared domain types: images, keypoints, graphs, descriptors, matches, homographies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Image:
    """Row-major image with intensities in [0, 1].

    ``pixels`` has shape ``(height, width)`` for one channel and
    ``(height, width, 3)`` for colour.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 3 and px.shape[2] == 1:
            px = px[:, :, 0]
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"unsupported pixel array shape {px.shape}")
        if px.size and (not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("pixel values must be finite and lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float = 0.0
    response: float = 0.0
    octave: int = 0

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"keypoint scale must be positive, got {self.scale}")
        if not (math.isfinite(self.response) and self.response >= 0):
            raise ValueError(f"keypoint response must be finite and >= 0, got {self.response}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("keypoint position must be finite")
        if self.octave < 0:
            raise ValueError("octave must be >= 0")
        object.__setattr__(self, "orientation", float(self.orientation) % (2 * math.pi))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def inside(self, width: int, height: int) -> bool:
        return 0 <= self.x <= width - 1 and 0 <= self.y <= height - 1


def keypoint_positions(kps: Sequence[Keypoint]) -> np.ndarray:
    """Stack keypoint positions into an ``(n, 2)`` array of (x, y)."""
    if len(kps) == 0:
        return np.zeros((0, 2))
    return np.array([[k.x, k.y] for k in kps], dtype=np.float64)


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph over ``n`` dense vertex ids.

    ``edges`` is an ``(E, 2)`` integer array. Builders in this package always
    emit canonical edges (``i < j``, lexicographically sorted, no duplicates);
    arbitrary edge arrays are accepted so :func:`validate_graph` can report on them.
    """

    n: int
    edges: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        if self.positions is not None:
            p = np.asarray(self.positions, dtype=np.float64).reshape(-1, 2)
            if len(p) != self.n:
                raise ValueError(f"{len(p)} positions for {self.n} vertices")
            p.setflags(write=False)
            object.__setattr__(self, "positions", p)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, positions=None) -> "Graph":
        """Build a canonical graph; duplicates collapse, self-loops are rejected."""
        return cls(n, canonical_edges(edges), positions)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(int(j))
            adj[j].append(int(i))
        return adj


def canonical_edges(edges: Iterable) -> np.ndarray:
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    e = e.reshape(-1, 2)
    if len(e) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if np.any(e[:, 0] == e[:, 1]):
        raise ValueError("self-loops are not allowed")
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def validate_graph(g: Graph) -> list[str]:
    """Return a list of invariant violations; empty iff the graph is well formed."""
    problems: list[str] = []
    seen: set[tuple[int, int]] = set()
    for a, b in g.edges:
        a, b = int(a), int(b)
        if a == b:
            problems.append(f"self-loop at {a}")
            continue
        for v in (a, b):
            if v < 0 or v >= g.n:
                problems.append(f"endpoint {v} out of range for n={g.n}")
        key = (min(a, b), max(a, b))
        if key in seen:
            problems.append(f"duplicate edge {key[0]}-{key[1]}")
        seen.add(key)
    return problems


@dataclass(frozen=True)
class DescriptorSet:
    """Row-per-vertex descriptor matrix; ``degenerate`` flags all-zero rows."""

    data: np.ndarray
    degenerate: np.ndarray | None = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError("descriptor data must be 2-D")
        if not np.all(np.isfinite(d)):
            raise ValueError("descriptor rows must be finite")
        deg = np.linalg.norm(d, axis=1) == 0 if self.degenerate is None else np.asarray(self.degenerate, bool)
        d.setflags(write=False)
        deg.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "degenerate", deg)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def subset(self, ids) -> "DescriptorSet":
        ids = np.asarray(ids, dtype=np.int64)
        return DescriptorSet(self.data[ids], self.degenerate[ids])


@dataclass(frozen=True)
class MatchSet:
    """One-to-one correspondences between vertices of image A and image B."""

    idx_a: np.ndarray
    idx_b: np.ndarray
    confidence: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.idx_a, dtype=np.int64).reshape(-1)
        b = np.asarray(self.idx_b, dtype=np.int64).reshape(-1)
        c = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if not (len(a) == len(b) == len(c)):
            raise ValueError("match arrays must have equal length")
        if len(np.unique(a)) != len(a) or len(np.unique(b)) != len(b):
            raise ValueError("matches must be one-to-one")
        if len(c) and (c.min() < 0 or c.max() > 1):
            raise ValueError("confidence must lie in [0, 1]")
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "idx_a", a)
        object.__setattr__(self, "idx_b", b)
        object.__setattr__(self, "confidence", c)

    def __len__(self) -> int:
        return len(self.idx_a)

    @classmethod
    def empty(cls, **meta) -> "MatchSet":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), dict(meta))


@dataclass(frozen=True)
class Homography:
    matrix: np.ndarray

    def __post_init__(self):
        H = np.array(self.matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(H)):
            raise ValueError("homography must be finite")
        if abs(np.linalg.det(H)) < 1e-300:
            raise ValueError("homography is singular")
        if H[2, 2] != 0:
            H = H / H[2, 2]
        H.setflags(write=False)
        object.__setattr__(self, "matrix", H)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))
