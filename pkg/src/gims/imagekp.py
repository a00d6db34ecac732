"""Grayscale conversion, Gaussian/DoG scale space, keypoint detection and oriented patches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import Image, Keypoint

LUMA = np.array([0.299, 0.587, 0.114])
LUMA = LUMA / LUMA.sum()  # white maps to exactly 1 after clipping
PATCH_CROP = 64
PATCH_SIZE = 32


def to_grayscale(img: Image) -> Image:
    if img.channels == 1:
        return img
    if img.channels != 3:
        raise ValueError(f"unsupported channel count {img.channels}")
    return Image(np.clip(img.pixels @ LUMA, 0.0, 1.0))


@dataclass(frozen=True)
class Pyramid:
    """Per-octave Gaussian stacks ``(S+3, h, w)`` and DoG stacks ``(S+2, h, w)``.

    ``first_octave`` is -1 when the input was upsampled 2x before octave 0.
    """

    gaussians: tuple[np.ndarray, ...]
    dogs: tuple[np.ndarray, ...]
    sigma0: float = 1.6
    scales: int = 3
    first_octave: int = -1

    @property
    def num_octaves(self) -> int:
        return len(self.gaussians)

    def octave_factor(self, octave: int) -> float:
        """Base-image pixels per pixel of the given octave."""
        return 2.0 ** (octave + self.first_octave)

    def level_sigma(self, octave: int, level: int) -> float:
        """Blur of a Gaussian level expressed in base-image pixels."""
        return self.sigma0 * 2.0 ** (octave + self.first_octave + level / self.scales)

    def nearest_level(self, sigma: float) -> tuple[int, int]:
        """(octave, level) whose blur is closest to ``sigma`` in log scale; finer octave wins ties."""
        target = math.log2(max(sigma, 1e-12) / self.sigma0) - self.first_octave
        best, best_d = (0, 0), math.inf
        for o in range(self.num_octaves):
            for s in range(self.scales + 3):
                d = abs(o + s / self.scales - target)
                if d < best_d - 1e-12:
                    best, best_d = (o, s), d
        return best


def num_octaves_for(width: int, height: int) -> int:
    return max(1, int(math.floor(math.log2(min(width, height)))) - 3)


def build_pyramid(img: Image, sigma0: float = 1.6, scales: int = 3, assumed_blur: float = 0.5,
                  num_octaves: int | None = None, upsample: bool = True) -> Pyramid:
    """Gaussian scale space; with ``upsample`` an extra 2x octave precedes the base resolution."""
    gray = to_grayscale(img).pixels
    if min(gray.shape) < 16:
        raise ValueError(f"image {gray.shape[1]}x{gray.shape[0]} is smaller than 16x16")
    n_oct = num_octaves if num_octaves is not None else num_octaves_for(gray.shape[1], gray.shape[0])
    sig = [sigma0 * 2.0 ** (s / scales) for s in range(scales + 3)]
    incr = [math.sqrt(sig[s] ** 2 - sig[s - 1] ** 2) for s in range(1, scales + 3)]
    if upsample:
        h, w = gray.shape
        yy, xx = np.mgrid[0:2 * h - 1, 0:2 * w - 1] / 2.0
        gray = ndimage.map_coordinates(gray, [yy, xx], order=1, mode="nearest")
        assumed_blur *= 2
        n_oct += 1
    base = ndimage.gaussian_filter(gray, math.sqrt(max(sigma0 ** 2 - assumed_blur ** 2, 0.01)), mode="mirror")
    gaussians, dogs = [], []
    for o in range(n_oct):
        levels = [base]
        for s in incr:
            levels.append(ndimage.gaussian_filter(levels[-1], s, mode="mirror"))
        stack = np.stack(levels)
        gaussians.append(stack)
        dogs.append(stack[1:] - stack[:-1])
        base = stack[scales][::2, ::2]
        if min(base.shape) < 4:
            break
    return Pyramid(tuple(gaussians), tuple(dogs), sigma0, scales, -1 if upsample else 0)


_NEIGHBOURS = np.ones((3, 3, 3), dtype=bool)
_NEIGHBOURS[1, 1, 1] = False


def _orientation(level: np.ndarray, x: float, y: float, sigma_rel: float) -> float:
    """Dominant gradient direction from a Gaussian-weighted 36-bin histogram."""
    h, w = level.shape
    sw = 1.5 * sigma_rel
    rad = max(1, int(round(3 * sw)))
    xi, yi = int(round(x)), int(round(y))
    x0, x1 = max(1, xi - rad), min(w - 2, xi + rad)
    y0, y1 = max(1, yi - rad), min(h - 2, yi + rad)
    if x1 < x0 or y1 < y0:
        return 0.0
    win = level[y0 - 1:y1 + 2, x0 - 1:x1 + 2]
    gx = (win[1:-1, 2:] - win[1:-1, :-2]) * 0.5
    gy = (win[2:, 1:-1] - win[:-2, 1:-1]) * 0.5
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    wgt = np.exp(-((xx - x) ** 2 + (yy - y) ** 2) / (2 * sw * sw))
    mag = np.hypot(gx, gy) * wgt
    ang = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    nb = 36
    hist = np.bincount((np.floor(ang * nb / (2 * np.pi)).astype(int) % nb).ravel(), weights=mag.ravel(), minlength=nb)
    for _ in range(2):
        hist = (np.roll(hist, 1) + hist + np.roll(hist, -1)) / 3.0
    if hist.max() <= 0:
        return 0.0
    k = int(np.argmax(hist))
    l, c, r = hist[(k - 1) % nb], hist[k], hist[(k + 1) % nb]
    denom = l - 2 * c + r
    off = 0.5 * (l - r) / denom if denom != 0 else 0.0
    return float(((k + 0.5 + off) * 2 * np.pi / nb) % (2 * np.pi))


def assign_orientation(pyr: Pyramid, x: float, y: float, scale: float) -> float:
    """Orientation (radians) of a base-image location at a given scale."""
    o, s = pyr.nearest_level(scale)
    f = pyr.octave_factor(o)
    return _orientation(pyr.gaussians[o][s], x / f, y / f, scale / f)


def detect_keypoints(img: Image, max_kp: int = 10000, contrast_thr: float = 0.03,
                     edge_ratio: float = 10.0, pyramid: Pyramid | None = None) -> list[Keypoint]:
    """DoG scale-space extrema surviving contrast and edge tests.

    Responses are raw |DoG|. When more than ``max_kp`` survive, the strongest
    are kept (ties by (y, x)); the result is in (octave, scale, y, x) order.
    """
    if max_kp < 0:
        raise ValueError("max_kp must be >= 0")
    if img.channels != 1:
        raise ValueError("detect_keypoints expects a grayscale image")
    pyr = pyramid if pyramid is not None else build_pyramid(img)
    S = pyr.scales
    edge_lim = (edge_ratio + 1) ** 2 / edge_ratio
    found = []  # (octave, level, y, x, response, x_base, y_base, sigma)
    for o, dog in enumerate(pyr.dogs):
        if min(dog.shape[1:]) < 3:
            continue
        mx = ndimage.maximum_filter(dog, footprint=_NEIGHBOURS, mode="nearest")
        mn = ndimage.minimum_filter(dog, footprint=_NEIGHBOURS, mode="nearest")
        core = np.zeros_like(dog, dtype=bool)
        core[1:S + 1, 1:-1, 1:-1] = True
        ext = core & (np.abs(dog) >= contrast_thr) & ((dog > mx) | (dog < mn))
        for s, y, x in zip(*np.nonzero(ext)):
            d = dog[s]
            dxx = d[y, x + 1] + d[y, x - 1] - 2 * d[y, x]
            dyy = d[y + 1, x] + d[y - 1, x] - 2 * d[y, x]
            dxy = (d[y + 1, x + 1] - d[y + 1, x - 1] - d[y - 1, x + 1] + d[y - 1, x - 1]) / 4
            det = dxx * dyy - dxy * dxy
            tr = dxx + dyy
            if det <= 0 or tr * tr / det >= edge_lim:
                continue
            f = pyr.octave_factor(o)
            found.append((o, int(s), int(y), int(x), float(abs(d[y, x])), x * f, y * f, pyr.level_sigma(o, int(s))))
    if len(found) > max_kp:
        ranked = sorted(found, key=lambda t: (-t[4], t[6], t[5]))
        found = sorted(ranked[:max_kp], key=lambda t: t[:4])
    kps = []
    for o, s, y, x, resp, xb, yb, sigma in found:
        theta = _orientation(pyr.gaussians[o][s], float(x), float(y), sigma / pyr.octave_factor(o))
        kps.append(Keypoint(float(xb), float(yb), float(sigma), theta, resp, o))
    return kps


def extract_patch(pyr: Pyramid, kp: Keypoint) -> np.ndarray:
    """32x32 patch: a 64x64 window at the nearest pyramid level, rotated by the
    keypoint orientation (bilinear, mirror padding) and 2x2-averaged."""
    o, s = pyr.nearest_level(kp.scale)
    level = pyr.gaussians[o][s]
    f = pyr.octave_factor(o)
    cx, cy = kp.x / f, kp.y / f
    half = (PATCH_CROP - 1) / 2.0
    u = np.arange(PATCH_CROP) - half
    uu, vv = np.meshgrid(u, u)  # uu varies along columns
    c, sn = math.cos(kp.orientation), math.sin(kp.orientation)
    xs = cx + c * uu - sn * vv
    ys = cy + sn * uu + c * vv
    big = ndimage.map_coordinates(level, [ys, xs], order=1, mode="mirror")
    small = big.reshape(PATCH_SIZE, 2, PATCH_SIZE, 2).mean(axis=(1, 3))
    return np.clip(small, 0.0, 1.0)


def extract_patches(pyr: Pyramid, kps) -> np.ndarray:
    if len(kps) == 0:
        return np.zeros((0, PATCH_SIZE, PATCH_SIZE))
    return np.stack([extract_patch(pyr, k) for k in kps])
