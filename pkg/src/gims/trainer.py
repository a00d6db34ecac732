"""Synthetic homography supervision, ground-truth labelling, NLL loss and Adam training."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import autodiff as ad
from . import matcher
from .core import Image, MatchSet
from .encoder import EncoderConfig, ModelWeights, encode_pair_t
from .geometry import DegenerateConfiguration, apply_homography, dlt_homography, image_corners
from .pipeline import PIPELINE_TEMPERATURE, ImageFeatures, RunConfig, prepare_image

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


class TrainingDiverged(FloatingPointError):
    pass


# ---- synthetic pairs ---------------------------------------------------------------------

@dataclass(frozen=True)
class HomographyRanges:
    scale: tuple[float, float] = (0.8, 1.2)
    rotation_deg: tuple[float, float] = (-30.0, 30.0)
    translation: float = 0.10   # fraction of width / height
    perspective: float = 0.05   # corner jitter, fraction of width / height
    crop: tuple[float, float] = (0.9, 1.0)  # kept window fraction, rescaled to full size

    def __post_init__(self):
        if not 0 < self.scale[0] <= self.scale[1]:
            raise ValueError("scale range must be positive and ordered")
        if self.rotation_deg[0] > self.rotation_deg[1]:
            raise ValueError("rotation range must be ordered")
        if not (0 <= self.translation and 0 <= self.perspective < 0.25):
            raise ValueError("translation must be >= 0 and perspective in [0, 0.25)")
        if not 0 < self.crop[0] <= self.crop[1] <= 1:
            raise ValueError("crop range must lie in (0, 1]")

    @classmethod
    def identity(cls) -> "HomographyRanges":
        return cls((1.0, 1.0), (0.0, 0.0), 0.0, 0.0, (1.0, 1.0))


def _about(M: np.ndarray, cx: float, cy: float) -> np.ndarray:
    T = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1.0]])
    Ti = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1.0]])
    return T @ M @ Ti


def _draw(w: float, h: float, rng: np.random.Generator, r: HomographyRanges) -> np.ndarray:
    cx, cy = w / 2.0, h / 2.0
    c = rng.uniform(*r.crop)
    ox, oy = rng.uniform(0, (1 - c) * w), rng.uniform(0, (1 - c) * h)
    C = np.array([[1 / c, 0, -ox / c], [0, 1 / c, -oy / c], [0, 0, 1.0]])
    corners = image_corners(w, h)
    jitter = rng.uniform(-r.perspective, r.perspective, size=(4, 2)) * [w, h]
    P = dlt_homography(corners, corners + jitter) if r.perspective > 0 else np.eye(3)
    s = rng.uniform(*r.scale)
    S = _about(np.diag([s, s, 1.0]), cx, cy)
    a = math.radians(rng.uniform(*r.rotation_deg))
    R = _about(np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1.0]]), cx, cy)
    tx, ty = rng.uniform(-r.translation, r.translation) * w, rng.uniform(-r.translation, r.translation) * h
    T = np.array([[1, 0, tx], [0, 1, ty], [0, 0, 1.0]])
    H = T @ R @ S @ P @ C
    return H / H[2, 2]


def _usable(H: np.ndarray, w: float, h: float) -> bool:
    if not np.all(np.isfinite(H)) or abs(np.linalg.det(H)) < 1e-8:
        return False
    q = np.c_[image_corners(w, h), np.ones(4)] @ H.T
    return bool(np.all(q[:, 2] > 1e-6))


def sample_homography(w: float, h: float, seed: int, ranges: HomographyRanges = HomographyRanges(),
                      max_retries: int = 100) -> np.ndarray:
    """``T . R . S . P . C`` with rotation and scale about the image centre.

    Draws that are singular or send an image corner behind the camera are
    redrawn from the same generator.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        try:
            H = _draw(w, h, rng, ranges)
        except DegenerateConfiguration:
            continue
        if _usable(H, w, h):
            return H
    raise RuntimeError(f"no invertible homography after {max_retries} draws")


def warp_image(img: Image, H, out_size: tuple[int, int] | None = None) -> Image:
    """Bilinear backward warp: ``out(p) = img(H^-1 p)``; outside samples are 0."""
    H = np.asarray(getattr(H, "matrix", H), dtype=np.float64)
    w, h = out_size or (img.width, img.height)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    q = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    src = np.linalg.inv(H) @ q
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = src[0] / src[2]
        sy = src[1] / src[2]
    bad = ~(np.isfinite(sx) & np.isfinite(sy)) | (src[2] <= 0)
    sx[bad], sy[bad] = -1e6, -1e6
    px = img.pixels

    def sample(ch):
        out = ndimage.map_coordinates(ch, [sy, sx], order=1, mode="constant", cval=0.0)
        return np.clip(out.reshape(h, w), 0.0, 1.0)

    if px.ndim == 2:
        return Image(sample(px))
    return Image(np.stack([sample(px[:, :, c]) for c in range(px.shape[2])], axis=2))


def render_scene(w: int = 320, h: int = 240, seed: int = 0, shapes: int = 40) -> Image:
    """Procedural grayscale scene: shaded background plus random rectangles,
    ellipses, triangles and small checkerboards, lightly blurred."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    gx, gy = rng.uniform(-0.3, 0.3, size=2)
    img = 0.5 + gx * (xs / w - 0.5) + gy * (ys / h - 0.5)
    for _ in range(shapes):
        kind = rng.integers(4)
        val = rng.uniform(0, 1)
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        size = rng.uniform(0.03, 0.18) * min(w, h)
        if kind == 0:
            a = rng.uniform(0, np.pi)
            u = (xs - cx) * math.cos(a) + (ys - cy) * math.sin(a)
            v = -(xs - cx) * math.sin(a) + (ys - cy) * math.cos(a)
            mask = (np.abs(u) < size) & (np.abs(v) < size * rng.uniform(0.3, 1.0))
        elif kind == 1:
            ax, ay = size, size * rng.uniform(0.4, 1.0)
            mask = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 < 1
        elif kind == 2:
            pts = np.array([cx, cy]) + rng.uniform(-size, size, size=(3, 2)) * 1.5
            mask = _triangle_mask(xs, ys, pts)
        else:
            cell = max(3.0, size / 3)
            mask = (np.abs(xs - cx) < size) & (np.abs(ys - cy) < size)
            checker = ((np.floor((xs - cx) / cell) + np.floor((ys - cy) / cell)) % 2) == 0
            mask &= checker
        img[mask] = val
    img = ndimage.gaussian_filter(img, 0.8, mode="mirror")
    img += rng.normal(0, 0.005, size=img.shape)
    return Image(np.clip(img, 0.0, 1.0))


def _triangle_mask(xs, ys, pts) -> np.ndarray:
    def side(p, q):
        return (q[0] - p[0]) * (ys - p[1]) - (q[1] - p[1]) * (xs - p[0])

    a, b, c = side(pts[0], pts[1]), side(pts[1], pts[2]), side(pts[2], pts[0])
    return ((a >= 0) & (b >= 0) & (c >= 0)) | ((a <= 0) & (b <= 0) & (c <= 0))


@dataclass(frozen=True)
class SynthPair:
    source: Image
    warped: Image
    H: np.ndarray
    seed: int


def make_pair(seed: int, w: int = 320, h: int = 240, ranges: HomographyRanges = HomographyRanges(),
              source: Image | None = None) -> SynthPair:
    src = source if source is not None else render_scene(w, h, seed)
    H = sample_homography(src.width, src.height, seed + 1_000_003, ranges)
    return SynthPair(src, warp_image(src, H), H, seed)


# ---- ground truth and loss -----------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruth:
    pairs: np.ndarray        # (k, 2) positive (i, j)
    unmatched_a: np.ndarray  # -> dustbin column
    unmatched_b: np.ndarray  # -> dustbin row
    m: int
    n: int
    eps: float = 3.0

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        rows = np.concatenate([self.pairs[:, 0], self.unmatched_a, np.full(len(self.unmatched_b), self.m)])
        cols = np.concatenate([self.pairs[:, 1], np.full(len(self.unmatched_a), self.n), self.unmatched_b])
        return rows.astype(np.int64), cols.astype(np.int64)


def _mutual_nn_rounds(i, j, d) -> list[tuple[int, int]]:
    """Repeatedly accept every mutual-nearest candidate pair, then drop used vertices."""
    out = []
    while len(d):
        order = np.lexsort((j, i, d))
        i, j, d = i[order], j[order], d[order]
        _, first_i = np.unique(i, return_index=True)
        _, first_j = np.unique(j, return_index=True)
        mutual = np.intersect1d(first_i, first_j)
        out.extend(zip(i[mutual].tolist(), j[mutual].tolist()))
        keep = ~np.isin(i, i[mutual]) & ~np.isin(j, j[mutual])
        i, j, d = i[keep], j[keep], d[keep]
    return out


def label_ground_truth(pos_a, pos_b, H, eps: float = 3.0, size_b: tuple[float, float] | None = None) -> GroundTruth:
    """Project A into B and pair mutual nearest neighbours closer than ``eps``.

    Projections outside image B (when ``size_b`` is given) go to the dustbin.
    """
    pa = np.asarray(pos_a, dtype=np.float64).reshape(-1, 2)
    pb = np.asarray(pos_b, dtype=np.float64).reshape(-1, 2)
    m, n = len(pa), len(pb)
    if m and n:
        proj = apply_homography(H, pa)
        ok = np.all(np.isfinite(proj), axis=1)
        if size_b is not None:
            w, h = size_b
            ok &= (proj[:, 0] >= 0) & (proj[:, 0] <= w - 1) & (proj[:, 1] >= 0) & (proj[:, 1] <= h - 1)
        valid = np.flatnonzero(ok)
        sdm = cKDTree(proj[valid]).sparse_distance_matrix(cKDTree(pb), eps, output_type="ndarray")
        sdm = sdm[sdm["v"] < eps]
        pairs = _mutual_nn_rounds(valid[sdm["i"]], sdm["j"].astype(np.int64), sdm["v"])
    else:
        pairs = []
    pairs = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    un_a = np.setdiff1d(np.arange(m), pairs[:, 0])
    un_b = np.setdiff1d(np.arange(n), pairs[:, 1])
    return GroundTruth(pairs, un_a, un_b, m, n, eps)


def nll_loss(plan, gt: GroundTruth) -> float:
    """Negative mean log of the plan over every labelled cell (log floored at 1e-12)."""
    Q = np.asarray(getattr(plan, "plan", plan), dtype=np.float64)
    r, c = gt.cells()
    if len(r) == 0:
        return 0.0
    return float(-np.log(np.maximum(Q[r, c], LOG_FLOOR)).mean())


def nll_loss_t(log_plan: ad.Tensor, gt: GroundTruth) -> ad.Tensor:
    r, c = gt.cells()
    picked = ad.floor_at(ad.take(log_plan, (r, c)), math.log(LOG_FLOOR))
    return ad.mean(picked) * -1.0


def precision(matches: MatchSet, pos_a, pos_b, H, tol: float = 3.0) -> tuple[int, int]:
    """(correct, extracted): a match is correct when H maps A within ``tol`` px of B."""
    if len(matches) == 0:
        return 0, 0
    pa = apply_homography(H, np.asarray(pos_a)[matches.idx_a])
    err = np.linalg.norm(pa - np.asarray(pos_b)[matches.idx_b], axis=1)
    return int((err < tol).sum()), len(matches)


# ---- optimisation --------------------------------------------------------------------------

@dataclass
class Adam:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self.t += 1
        out = {}
        for k, p in params.items():
            g = grads.get(k)
            if g is None:
                out[k] = p
                continue
            m = self.m.get(k, np.zeros_like(p)) * self.beta1 + (1 - self.beta1) * g
            v = self.v.get(k, np.zeros_like(p)) * self.beta2 + (1 - self.beta2) * g * g
            self.m[k], self.v[k] = m, v
            mh = m / (1 - self.beta1 ** self.t)
            vh = v / (1 - self.beta2 ** self.t)
            out[k] = p - self.lr * mh / (np.sqrt(vh) + self.eps)
        return out

    def state_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t}


@dataclass
class TrainingExample:
    features_a: ImageFeatures
    features_b: ImageFeatures
    gt: GroundTruth
    H: np.ndarray
    seed: int


def prepare_example(pair: SynthPair, cfg: RunConfig, eps_gt: float = 3.0) -> TrainingExample:
    fa = prepare_image(pair.source, cfg)
    fb = prepare_image(pair.warped, cfg)
    gt = label_ground_truth(fa.positions, fb.positions, pair.H, eps_gt, fb.size)
    return TrainingExample(fa, fb, gt, pair.H, pair.seed)


def forward_loss(P: dict, ex: TrainingExample, cfg: EncoderConfig, iters: int, temperature: float) -> tuple[ad.Tensor, ad.Tensor]:
    """Returns ``(loss, log_plan)`` as tensors connected to ``P``."""
    fa, fb = encode_pair_t(ex.features_a.graph_input(), ex.features_b.graph_input(), P, cfg)
    S = ad.matmul(fa, ad.transpose(fb))
    log_plan = matcher.sinkhorn_t(matcher.augment_t(S, P["dustbin"]), iters, temperature)
    return nll_loss_t(log_plan, ex.gt), log_plan


def loss_and_grads(weights: ModelWeights, batch, iters: int, temperature: float) -> tuple[float, dict]:
    P = weights.tensors(requires_grad=True)
    total = None
    for ex in batch:
        loss, _ = forward_loss(P, ex, weights.config, iters, temperature)
        total = loss if total is None else total + loss
    total = total * (1.0 / len(batch))
    total.backward()
    grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in P.items()}
    return float(total.data), grads


def train_step(batch, weights: ModelWeights, optimizer: Adam | None = None, *,
               iters: int = matcher.DEFAULT_ITERS, temperature: float = PIPELINE_TEMPERATURE
               ) -> tuple[ModelWeights, float]:
    """One forward/backward pass over ``batch`` followed by an Adam update."""
    optimizer = optimizer if optimizer is not None else Adam()
    loss, grads = loss_and_grads(weights, batch, iters, temperature)
    if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
        bad = sorted(k for k, g in grads.items() if not np.all(np.isfinite(g)))
        raise TrainingDiverged(f"non-finite loss {loss} at step {optimizer.t + 1}; bad gradients: {bad[:5]}")
    new = optimizer.step(weights.params, grads)
    return ModelWeights(weights.config, new), loss


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 300
    lr: float = 1e-4
    pairs: int = 50
    max_kp: int = 256
    eps_gt: float = 3.0
    seed: int = 0
    width: int = 320
    height: int = 240
    window: int = 20
    sinkhorn_iters: int = matcher.DEFAULT_ITERS
    temperature: float = PIPELINE_TEMPERATURE
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        if self.max_kp > 512:
            raise ValueError("training is capped at 512 keypoints per image")
        if isinstance(self.encoder, dict):
            object.__setattr__(self, "encoder", EncoderConfig(**self.encoder))

    def run_config(self) -> RunConfig:
        return RunConfig(max_kp=self.max_kp, sinkhorn_iters=self.sinkhorn_iters,
                         temperature=self.temperature, gnn_layers=self.encoder.gnn_layers, seed=self.seed)


def synthetic_dataset(count: int, seed: int, cfg: TrainConfig) -> list[TrainingExample]:
    run = cfg.run_config()
    out = []
    for k in range(count):
        pair = make_pair(seed + k, cfg.width, cfg.height)
        ex = prepare_example(pair, run, cfg.eps_gt)
        if ex.features_a.graph.n and ex.features_b.graph.n:
            out.append(ex)
    return out


def smoothed(values, window: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if len(v) < window:
        return np.array([v.mean()]) if len(v) else v
    return np.convolve(v, np.ones(window) / window, mode="valid")


@dataclass
class TrainResult:
    weights: ModelWeights
    losses: list[float]
    seconds: float
    optimizer: Adam

    def smoothed_losses(self, window: int = 20) -> np.ndarray:
        return smoothed(self.losses, window)


def train(dataset, cfg: TrainConfig = TrainConfig(), weights: ModelWeights | None = None,
          callback=None) -> TrainResult:
    """Single-pair steps cycling through a seeded permutation of ``dataset``."""
    if not dataset:
        raise ValueError("empty training set")
    weights = weights if weights is not None else ModelWeights.random(cfg.encoder, cfg.seed)
    opt = Adam(lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    order = np.concatenate([rng.permutation(len(dataset)) for _ in range(cfg.steps // len(dataset) + 1)])
    losses = []
    t0 = time.perf_counter()
    for step in range(cfg.steps):
        weights, loss = train_step([dataset[order[step]]], weights, opt,
                                   iters=cfg.sinkhorn_iters, temperature=cfg.temperature)
        losses.append(loss)
        if callback is not None:
            callback(step, loss, weights)
        if step % 25 == 0:
            log.info("step %d loss %.4f", step, loss)
    return TrainResult(weights, losses, time.perf_counter() - t0, opt)


def evaluate_precision(weights: ModelWeights, dataset, cfg: RunConfig, tol: float = 3.0) -> dict:
    from .pipeline import match_features

    correct = extracted = 0
    for ex in dataset:
        res = match_features(ex.features_a, ex.features_b, weights, cfg)
        c, e = precision(res.matches, ex.features_a.positions, ex.features_b.positions, ex.H, tol)
        correct += c
        extracted += e
    return {"correct": correct, "extracted": extracted,
            "precision": correct / extracted if extracted else 0.0}
