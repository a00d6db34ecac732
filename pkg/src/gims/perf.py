"""Stage timings for one pipeline run and the AGC scaling study."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from . import agc, descriptor
from .core import Image
from .encoder import ModelWeights
from .pipeline import STAGES, RunConfig, match_pair
from .spatial import KdTree


@dataclass(frozen=True)
class TimingRow:
    stage: str
    seconds: float
    sizes: tuple[int, int]

    def __post_init__(self):
        if self.seconds < 0:
            raise ValueError("negative stage time")


def profile_pipeline(img_a: Image, img_b: Image, weights: ModelWeights,
                     cfg: RunConfig = RunConfig()) -> tuple[list[TimingRow], float]:
    """Per-stage wall time of one full run plus the measured total."""
    res = match_pair(img_a, img_b, weights, cfg)
    sizes = (res.features_a.graph.n, res.features_b.graph.n)
    rows = [TimingRow(s, res.timings[s], sizes) for s in STAGES if s in res.timings]
    return rows, res.timings["total"]


def describe_seconds(n: int, seed: int = 0, repeats: int = 3) -> float:
    """Best-of-``repeats`` time to describe ``n`` random 32x32 patches."""
    patches = np.random.default_rng(seed).uniform(0, 1, size=(n, 32, 32))
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        descriptor.describe(patches)
        best = min(best, time.perf_counter() - t0)
    return best


def synthetic_instance(n: int, seed: int, density: float = 0.01, dim: int = 128):
    """Uniform points at ``density`` points per square pixel with random unit descriptors."""
    rng = np.random.default_rng(seed)
    side = math.sqrt(n / density)
    pos = rng.uniform(0, side, size=(n, 2))
    desc = rng.normal(size=(n, dim))
    desc /= np.linalg.norm(desc, axis=1, keepdims=True)
    return pos, desc


@dataclass(frozen=True)
class ScalingRow:
    n: int
    coarse_seconds: float
    total_seconds: float
    candidates: int
    edges: int


def fit_exponent(ns, seconds) -> float:
    """Slope of log(time) against log(n) by least squares."""
    if len(ns) < 2:
        return math.nan
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(seconds, float)), 1)[0])


def scaling_study(n_list, seed: int = 0, density: float = 0.01, repeats: int = 3,
                  params: agc.AgcParams = agc.AgcParams()) -> tuple[list[ScalingRow], float]:
    """Coarse-stage (KD build, radius pairs, similarity filter) and full AGC times.

    Returns the rows and the fitted growth exponent of the coarse stage.
    """
    ns = list(n_list)
    if ns != sorted(ns):
        raise ValueError("n_list must be ascending")
    rows = []
    for k, n in enumerate(ns):
        pos, desc = synthetic_instance(n, seed + k, density)
        coarse = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            g, stats = agc.build_coarse(pos, desc, params, tree=KdTree(pos))
            coarse = min(coarse, time.perf_counter() - t0)
        t0 = time.perf_counter()
        agc.build_agc(pos, desc, params)
        total = time.perf_counter() - t0
        rows.append(ScalingRow(n, coarse, total, len(stats.pairs), g.num_edges))
    exponent = fit_exponent([r.n for r in rows], [r.coarse_seconds for r in rows]) if rows else math.nan
    return rows, exponent


def scaling_csv(rows: list[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "coarse_seconds", "total_seconds", "candidates", "edges"])
    for r in rows:
        w.writerow([r.n, f"{r.coarse_seconds:.6f}", f"{r.total_seconds:.6f}", r.candidates, r.edges])
    return buf.getvalue()
