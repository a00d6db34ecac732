"""Homography algebra, normalized DLT, RANSAC and corner-error AUC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NO_ESTIMATE = math.inf


class DegenerateConfiguration(ValueError):
    pass


class PointAtInfinity(ValueError):
    pass


@dataclass(frozen=True)
class RansacConfig:
    max_iters: int = 2000
    inlier_thr: float = 3.0
    seed: int = 0
    confidence: float = 0.999

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.inlier_thr > 0:
            raise ValueError("inlier_thr must be > 0")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


def _matrix(H) -> np.ndarray:
    return np.asarray(getattr(H, "matrix", H), dtype=np.float64).reshape(3, 3)


def apply_homography(H, pts) -> np.ndarray:
    """Project points with perspective division; accepts one point or an ``(n, 2)`` array."""
    H = _matrix(H)
    p = np.asarray(pts, dtype=np.float64)
    single = p.ndim == 1
    p = p.reshape(-1, 2)
    q = p @ H[:, :2].T + H[:, 2]
    w = q[:, 2]
    if np.any(w == 0):
        raise PointAtInfinity("point maps to infinity")
    out = q[:, :2] / w[:, None]
    return out[0] if single else out


def _normalizer(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if d == 0:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(2) / d
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])


def _has_collinear_triple(pts: np.ndarray, tol: float = 1e-9) -> bool:
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                a, b, c = pts[i], pts[j], pts[k]
                area = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
                scale = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1e-300) ** 2
                if area <= tol * scale:
                    return True
    return False


def dlt_homography(src, dst) -> np.ndarray:
    """Hartley-normalized DLT; returns H scaled so ``H[2, 2] == 1`` when nonzero."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("src and dst must have the same length")
    if len(src) < 4:
        raise DegenerateConfiguration("need at least 4 correspondences")
    if len(src) == 4 and (_has_collinear_triple(src) or _has_collinear_triple(dst)):
        raise DegenerateConfiguration("three of the four points are collinear")
    Ts, Td = _normalizer(src), _normalizer(dst)
    s = src @ Ts[:2, :2].T + Ts[:2, 2]
    d = dst @ Td[:2, :2].T + Td[:2, 2]
    n = len(s)
    A = np.zeros((2 * n, 9))
    x, y, u, v = s[:, 0], s[:, 1], d[:, 0], d[:, 1]
    A[0::2, 0], A[0::2, 1], A[0::2, 2] = x, y, 1
    A[0::2, 6], A[0::2, 7], A[0::2, 8] = -u * x, -u * y, -u
    A[1::2, 3], A[1::2, 4], A[1::2, 5] = x, y, 1
    A[1::2, 6], A[1::2, 7], A[1::2, 8] = -v * x, -v * y, -v
    _, sv, Vt = np.linalg.svd(A)
    if sv[7] <= 1e-10 * sv[0]:
        raise DegenerateConfiguration("correspondences do not determine a homography")
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    if abs(np.linalg.det(H)) < 1e-300 * max(1.0, np.abs(H).max() ** 3):
        raise DegenerateConfiguration("estimated homography is singular")
    if H[2, 2] != 0:
        H = H / H[2, 2]
    return H


def _forward_error(H: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    q = src @ H[:, :2].T + H[:, 2]
    w = q[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = q[:, :2] / w[:, None]
        err = np.sqrt(((proj - dst) ** 2).sum(axis=1))
    return np.where(np.isfinite(err) & (w != 0), err, np.inf)


def ransac_homography(src, dst, cfg: RansacConfig = RansacConfig()):
    """4-point RANSAC on forward reprojection error, refit on all inliers.

    Returns ``(H, inlier_mask)``, or ``(None, all-False mask)`` when no model
    can be estimated.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    n = len(src)
    mask = np.zeros(n, dtype=bool)
    if n < 4:
        return None, mask
    rng = np.random.default_rng(cfg.seed)
    best_H, best_count, best_err = None, -1, np.inf
    needed = cfg.max_iters
    it = 0
    while it < min(cfg.max_iters, needed):
        it += 1
        idx = rng.choice(n, size=4, replace=False)
        try:
            H = dlt_homography(src[idx], dst[idx])
        except (DegenerateConfiguration, np.linalg.LinAlgError):
            continue
        err = _forward_error(H, src, dst)
        inl = err < cfg.inlier_thr
        count = int(inl.sum())
        tot = float(err[inl].sum())
        if count > best_count or (count == best_count and tot < best_err):
            best_H, best_count, best_err = H, count, tot
            frac = count / n
            if frac >= 1.0:
                needed = 0
            elif frac > 0:
                needed = min(cfg.max_iters, int(math.ceil(math.log(1 - cfg.confidence) / math.log(1 - frac ** 4))))
    if best_H is None:
        return None, mask
    mask = _forward_error(best_H, src, dst) < cfg.inlier_thr
    H = best_H
    if mask.sum() >= 4:
        try:
            refit = dlt_homography(src[mask], dst[mask])
            refit_mask = _forward_error(refit, src, dst) < cfg.inlier_thr
            if refit_mask.sum() >= mask.sum():
                H, mask = refit, refit_mask
        except (DegenerateConfiguration, np.linalg.LinAlgError):
            pass
    return H, mask


def image_corners(w: float, h: float) -> np.ndarray:
    return np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])


def corner_error(H_est, H_true, w: float, h: float) -> float:
    """Mean distance between the image corners mapped by both homographies."""
    if H_est is None:
        return NO_ESTIMATE
    c = image_corners(w, h)
    try:
        a = apply_homography(H_est, c)
        b = apply_homography(H_true, c)
    except PointAtInfinity:
        return NO_ESTIMATE
    return float(np.sqrt(((a - b) ** 2).sum(axis=1)).mean())


def auc(errors, threshold: float, drop_missing: bool = False) -> float:
    """Area under the cumulative error curve up to ``threshold``, in percent.

    The curve is the empirical CDF, a step function; it is integrated exactly
    with the trapezoid rule over its corner points. Missing estimates count as
    infinite error unless ``drop_missing`` is set.
    """
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    e = np.array([NO_ESTIMATE if x is None else float(x) for x in errors], dtype=np.float64)
    if drop_missing:
        e = e[np.isfinite(e)]
    if len(e) == 0:
        raise ValueError("auc of an empty error list")
    n = len(e)
    e = np.sort(e)
    inside = e[e <= threshold]
    k = len(inside)
    xs = np.concatenate([[0.0], np.repeat(inside, 2), [threshold]])
    ys = np.concatenate([[0.0], np.repeat(np.arange(k + 1) / n, 2)[1:-1], [k / n]])
    area = np.trapezoid(ys, xs)
    return float(100.0 * area / threshold)


def auc_table(errors, thresholds=(5, 10, 25), drop_missing: bool = False) -> dict[str, float]:
    return {f"auc@{t}": auc(errors, t, drop_missing) for t in thresholds}
