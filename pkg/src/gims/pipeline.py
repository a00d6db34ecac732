"""End-to-end orchestration: detect, describe, build graphs, match, estimate H.

Stage names in timing dictionaries follow the latency breakdown used by the
profiler: KD (detect), PG (patch generation), DG (describe), GC (graph),
Matching and RANSAC.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import agc, baselines, descriptor, imagekp, matcher
from .core import DescriptorSet, Graph, Image, Keypoint, MatchSet, keypoint_positions
from .encoder import GraphInput, ModelWeights, encode_pair
from .geometry import RansacConfig, ransac_homography

STAGES = ("KD", "PG", "DG", "GC", "Matching", "RANSAC")
GRAPH_METHODS = ("agc",) + baselines.BASELINE_KINDS + ("none",)
# Matching temperature for encoded features; the bare Sinkhorn operator defaults to 1.
PIPELINE_TEMPERATURE = 0.05


@dataclass(frozen=True)
class RunConfig:
    beta: float = 15.0
    alpha: float = 2.0
    theta: int = 7
    max_kp: int = 10000
    sinkhorn_iters: int = matcher.DEFAULT_ITERS
    temperature: float = PIPELINE_TEMPERATURE
    gnn_layers: int = 3
    min_conf: float = matcher.DEFAULT_MIN_CONF
    ransac: RansacConfig = field(default_factory=RansacConfig)
    seed: int = 0
    drop_missing: bool = False
    descriptor: str = "hist128"
    graph_method: str = "agc"
    graph_param: float | None = None

    def __post_init__(self):
        agc.AgcParams(self.beta, self.alpha, self.theta)
        if self.max_kp < 0:
            raise ValueError("max_kp must be >= 0")
        if self.sinkhorn_iters < 1:
            raise ValueError("sinkhorn_iters must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if self.gnn_layers < 0:
            raise ValueError("gnn_layers must be >= 0")
        if not 0 <= self.min_conf <= 1:
            raise ValueError("min_conf must lie in [0, 1]")
        if self.graph_method not in GRAPH_METHODS:
            raise ValueError(f"unknown graph method {self.graph_method!r}")
        if isinstance(self.ransac, dict):
            object.__setattr__(self, "ransac", RansacConfig(**self.ransac))

    @property
    def agc_params(self) -> agc.AgcParams:
        return agc.AgcParams(self.beta, self.alpha, self.theta)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class ImageFeatures:
    """Everything one side of a matching problem needs, restricted to graph vertices."""

    keypoints: list[Keypoint]
    descriptors: DescriptorSet
    graph: Graph
    size: tuple[int, int]
    graph_report: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return keypoint_positions(self.keypoints)

    def graph_input(self) -> GraphInput:
        return GraphInput(self.descriptors.data, self.graph, self.positions, self.size)


def build_graph(positions, descriptors, cfg: RunConfig) -> tuple[Graph, dict, np.ndarray]:
    """Returns ``(graph, report, kept_ids)`` for the configured method."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if cfg.graph_method == "agc":
        g, rep = agc.build_agc(pos, descriptors, cfg.agc_params)
        return g, rep.as_dict(), rep.kept_ids
    if cfg.graph_method == "none":
        return Graph(len(pos), np.zeros((0, 2), dtype=np.int64), pos), {}, np.arange(len(pos))
    g = baselines.build_baseline(cfg.graph_method, pos, cfg.graph_param)
    return g, {}, np.arange(len(pos))


def prepare_image(img: Image, cfg: RunConfig = RunConfig(), provider=None) -> ImageFeatures:
    gray = imagekp.to_grayscale(img) if img.channels != 1 else img
    t = {}
    t0 = time.perf_counter()
    pyr = imagekp.build_pyramid(gray)
    kps = imagekp.detect_keypoints(gray, max_kp=cfg.max_kp, pyramid=pyr)
    t["KD"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    patches = imagekp.extract_patches(pyr, kps)
    t["PG"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    provider = provider or descriptor.DescriptorProvider(cfg.descriptor)
    if len(kps) or provider.kind == "external":
        desc = descriptor.describe(patches, provider)
    else:
        desc = DescriptorSet(np.zeros((0, provider.dim)))
    t["DG"] = time.perf_counter() - t0
    return attach_graph(kps, desc, (img.width, img.height), cfg, t)


def attach_graph(kps, desc: DescriptorSet, size, cfg: RunConfig, timings=None) -> ImageFeatures:
    """Build the configured graph over ``kps`` and drop vertices the builder removed."""
    timings = dict(timings or {})
    t0 = time.perf_counter()
    if len(kps) == 0 or cfg.graph_method == "none":
        n = len(kps)
        g, rep, kept = Graph(n, np.zeros((0, 2), dtype=np.int64)), {}, np.arange(n)
    else:
        g, rep, kept = build_graph(keypoint_positions(kps), desc, cfg)
    if cfg.graph_method != "none":
        timings["GC"] = time.perf_counter() - t0
    kps = [kps[i] for i in kept]
    return ImageFeatures(kps, desc.subset(kept), g, tuple(size), rep, timings)


@dataclass
class PairResult:
    matches: MatchSet
    assignment: matcher.Assignment | None
    homography: np.ndarray | None
    inliers: np.ndarray
    features_a: ImageFeatures
    features_b: ImageFeatures
    timings: dict[str, float]

    @property
    def src_points(self) -> np.ndarray:
        return self.features_a.positions[self.matches.idx_a]

    @property
    def dst_points(self) -> np.ndarray:
        return self.features_b.positions[self.matches.idx_b]


def assignment_for(fa: ImageFeatures, fb: ImageFeatures, weights: ModelWeights,
                   cfg: RunConfig = RunConfig()) -> matcher.Assignment:
    ea, eb = encode_pair(fa.graph_input(), fb.graph_input(), weights)
    sm = matcher.score_matrix(ea, eb, float(weights.params["dustbin"]))
    return matcher.sinkhorn(sm, cfg.sinkhorn_iters, cfg.temperature)


def match_features(fa: ImageFeatures, fb: ImageFeatures, weights: ModelWeights,
                   cfg: RunConfig = RunConfig()) -> PairResult:
    if weights.config.gnn_layers != cfg.gnn_layers:
        raise ValueError(f"weights hold {weights.config.gnn_layers} GraphSAGE layers, config asks for {cfg.gnn_layers}")
    if fa.descriptors.dim != weights.config.dim or fb.descriptors.dim != weights.config.dim:
        raise ValueError(f"descriptor dimension does not match weights (D={weights.config.dim})")
    timings = {}
    t0 = time.perf_counter()
    if fa.graph.n == 0 or fb.graph.n == 0:
        assignment, matches = None, MatchSet.empty()
    else:
        assignment = assignment_for(fa, fb, weights, cfg)
        matches = matcher.extract_matches(assignment, cfg.min_conf)
    timings["Matching"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    src = fa.positions[matches.idx_a]
    dst = fb.positions[matches.idx_b]
    H, mask = ransac_homography(src, dst, cfg.ransac)
    timings["RANSAC"] = time.perf_counter() - t0
    return PairResult(matches, assignment, H, mask, fa, fb, timings)


def match_pair(img_a: Image, img_b: Image, weights: ModelWeights, cfg: RunConfig = RunConfig()) -> PairResult:
    """Full pipeline on two images; ``timings`` sums each stage over both sides."""
    t_start = time.perf_counter()
    fa = prepare_image(img_a, cfg)
    fb = prepare_image(img_b, cfg)
    res = match_features(fa, fb, weights, cfg)
    timings = {s: fa.timings.get(s, 0.0) + fb.timings.get(s, 0.0) + res.timings.get(s, 0.0)
               for s in STAGES if s in fa.timings or s in res.timings}
    timings["total"] = time.perf_counter() - t_start
    res.timings = timings
    return res
