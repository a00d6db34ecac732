"""Side-by-side statistics for AGC and the baseline graph builders."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import agc, baselines

METHODS = ("agc",) + baselines.BASELINE_KINDS
DEFAULT_PARAMS = {"epsilon": 15.0, "knn": 4}
COMPLETE_LIMIT = 4000
COLUMNS = ("method", "param", "n", "edges", "components", "isolated", "mean_degree", "seconds", "error")


@dataclass
class CompareRow:
    method: str
    param: float | None
    stats: dict | None
    seconds: float
    error: str | None = None

    def as_dict(self) -> dict:
        s = self.stats or {}
        return {"method": self.method, "param": self.param, "n": s.get("n"), "edges": s.get("edges"),
                "components": s.get("components"), "isolated": s.get("isolated"),
                "mean_degree": s.get("mean_degree"), "seconds": self.seconds, "error": self.error}


@dataclass
class CompareReport:
    rows: list[CompareRow]

    def row(self, method: str) -> CompareRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r.as_dict())
        return buf.getvalue()

    def to_markdown(self) -> str:
        out = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        for r in self.rows:
            d = r.as_dict()
            cells = []
            for c in COLUMNS:
                v = d[c]
                if isinstance(v, float):
                    v = f"{v:.4g}"
                cells.append("" if v is None else str(v))
            out.append("| " + " | ".join(cells) + " |")
        return "\n".join(out) + "\n"


def _build_one(method: str, pos: np.ndarray, desc, param, agc_params: agc.AgcParams) -> CompareRow:
    t0 = time.perf_counter()
    try:
        if method == "agc":
            g, _ = agc.build_agc(pos, desc, agc_params)
        else:
            if method == "complete" and len(pos) > COMPLETE_LIMIT:
                raise ValueError(f"complete graph skipped above {COMPLETE_LIMIT} vertices")
            g = baselines.build_baseline(method, pos, param)
        return CompareRow(method, param, agc.graph_stats(g), time.perf_counter() - t0)
    except ValueError as exc:
        return CompareRow(method, param, None, time.perf_counter() - t0, str(exc))


def compare(positions, descriptors, methods=METHODS, params: dict | None = None,
            agc_params: agc.AgcParams = agc.AgcParams(), jobs: int = 1) -> CompareReport:
    """Build every requested graph and collect its statistics.

    Failures (for example Delaunay on fewer than three points) become rows
    with an ``error`` message; nothing is asserted.
    """
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}")
    p = dict(DEFAULT_PARAMS)
    p.update(params or {})
    tasks = [(m, pos, descriptors, p.get(m), agc_params) for m in methods]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(lambda t: _build_one(*t), tasks))
    else:
        rows = [_build_one(*t) for t in tasks]
    return CompareReport(rows)
