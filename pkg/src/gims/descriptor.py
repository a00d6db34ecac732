"""Patch descriptors: a 4x4x8 gradient histogram, normalized raw patches, or imported vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DescriptorSet

KINDS = ("hist128", "rawpatch", "external")
_DIMS = {"hist128": 128, "rawpatch": 1024}
CLAMP = 0.2


@dataclass(frozen=True)
class DescriptorProvider:
    kind: str = "hist128"
    external: DescriptorSet | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.kind == "external" and self.external is None:
            raise ValueError("external provider needs a loaded descriptor set")

    @property
    def dim(self) -> int:
        if self.kind == "external":
            return self.external.dim
        return _DIMS[self.kind]


def _gradients(patch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(patch, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return gx, gy


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.zeros_like(v)


def gradient_histogram(patch: np.ndarray, cells: int = 4, bins: int = 8) -> np.ndarray:
    """Unnormalized ``(cells, cells, bins)`` histogram of gradient magnitude.

    Every pixel spreads its magnitude trilinearly over the two nearest cell
    centres along each axis and the two nearest orientation bins, whose
    centres sit at multiples of ``2*pi/bins``.
    """
    size = patch.shape[0]
    gx, gy = _gradients(np.asarray(patch, dtype=np.float64))
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    cell_w = size / cells
    coords = (np.arange(size) + 0.5) / cell_w - 0.5
    cy, cx = np.meshgrid(coords, coords, indexing="ij")
    ob = ang * bins / (2 * np.pi)
    y0, x0, o0 = np.floor(cy).astype(int), np.floor(cx).astype(int), np.floor(ob).astype(int)
    fy, fx, fo = cy - y0, cx - x0, ob - o0
    side = cells + 2
    flat_idx, flat_w = [], []
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            for do, wo in ((0, 1 - fo), (1, fo)):
                flat_idx.append(((y0 + dy + 1) * side + (x0 + dx + 1)) * bins + (o0 + do) % bins)
                flat_w.append(mag * wy * wx * wo)
    hist = np.bincount(np.concatenate(flat_idx).ravel(), weights=np.concatenate(flat_w).ravel(),
                       minlength=side * side * bins)
    return hist.reshape(side, side, bins)[1:-1, 1:-1]


def hist128(patch: np.ndarray) -> tuple[np.ndarray, bool]:
    """Returns ``(descriptor, degenerate)``; degenerate patches give the zero vector."""
    v = gradient_histogram(patch).reshape(-1)
    if not np.any(v > 0):
        return np.zeros(128), True
    v = np.minimum(_normalize(v), CLAMP)
    return _normalize(v), False


def rawpatch(patch: np.ndarray) -> tuple[np.ndarray, bool]:
    v = np.asarray(patch, dtype=np.float64).reshape(-1)
    v = v - v.mean()
    if not np.any(np.abs(v) > 1e-15):
        return np.zeros(v.shape), True
    return _normalize(v), False


def describe(patches, provider: DescriptorProvider = DescriptorProvider()) -> DescriptorSet:
    if provider.kind == "external":
        ext = provider.external
        if patches is not None and len(patches) != ext.count:
            raise ValueError(f"external descriptors hold {ext.count} rows for {len(patches)} keypoints")
        return ext
    if len(patches) == 0:
        raise ValueError("describe needs at least one patch")
    fn = hist128 if provider.kind == "hist128" else rawpatch
    rows, flags = zip(*(fn(p) for p in patches))
    return DescriptorSet(np.array(rows), np.array(flags))
