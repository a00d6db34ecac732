"""Experiment drivers: pose evaluation, GraphSAGE depth study and the (beta, alpha, theta) sweep."""

from __future__ import annotations

import csv
import io
import itertools
import time
from dataclasses import replace

import numpy as np

from .encoder import EncoderConfig, ModelWeights
from .geometry import NO_ESTIMATE, auc_table, corner_error
from .pipeline import RunConfig, attach_graph, match_features, prepare_image
from .trainer import TrainConfig, precision, synthetic_dataset, train

THRESHOLDS = (5, 10, 25)


def evaluate_pairs(results, thresholds=THRESHOLDS, drop_missing: bool = False) -> dict:
    """``results`` holds ``(H_est or None, H_true, width, height, n_matches)`` tuples."""
    errors, counts = [], []
    for H_est, H_true, w, h, n in results:
        errors.append(corner_error(H_est, H_true, w, h) if H_est is not None else NO_ESTIMATE)
        counts.append(n)
    report = auc_table(errors, thresholds, drop_missing) if errors else {}
    report.update({
        "pairs": len(errors),
        "corner_errors": [None if not np.isfinite(e) else e for e in errors],
        "no_estimate": int(sum(not np.isfinite(e) for e in errors)),
        "mean_matches": float(np.mean(counts)) if counts else 0.0,
    })
    return report


def depth_study(depths=(0, 1, 2, 3, 4, 5), train_pairs: int = 10, eval_pairs: int = 10, steps: int = 30,
                seed: int = 0, max_kp: int = 128, lr: float = 1e-4, log=None) -> list[dict]:
    """AUC against GraphSAGE depth on synthetic pairs.

    Features and graphs are shared across depths; each depth starts from its
    own seeded initialisation and is trained for ``steps`` single-pair steps.
    """
    base = TrainConfig(steps=steps, lr=lr, max_kp=max_kp, seed=seed)
    train_set = synthetic_dataset(train_pairs, seed, base) if steps > 0 else []
    eval_set = synthetic_dataset(eval_pairs, seed + 50_000, base)
    rows = []
    for L in depths:
        t0 = time.perf_counter()
        cfg = replace(base, encoder=EncoderConfig(gnn_layers=L))
        weights = ModelWeights.random(cfg.encoder, seed)
        final_loss = None
        if steps > 0 and train_set:
            res = train(train_set, cfg, weights)
            weights, final_loss = res.weights, float(np.mean(res.losses[-min(10, len(res.losses)):]))
        run = cfg.run_config()
        outcomes = []
        for ex in eval_set:
            r = match_features(ex.features_a, ex.features_b, weights, run)
            outcomes.append((r.homography, ex.H, *ex.features_b.size, len(r.matches)))
        rep = evaluate_pairs(outcomes)
        row = {"L": L, **{f"auc@{t}": rep[f"auc@{t}"] for t in THRESHOLDS},
               "mean_matches": rep["mean_matches"], "final_loss": final_loss,
               "seconds": time.perf_counter() - t0}
        rows.append(row)
        if log:
            log(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def rows_to_markdown(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    fmt = lambda v: f"{v:.3f}" if isinstance(v, float) else ("" if v is None else str(v))  # noqa: E731
    out = ["| " + " | ".join(keys) + " |", "|" + "---|" * len(keys)]
    out += ["| " + " | ".join(fmt(r[k]) for k in keys) + " |" for r in rows]
    return "\n".join(out) + "\n"


def sweep(pairs, betas=(10, 15, 20, 25, 30), alphas=(0, 2, 5, 10), thetas=(0, 3, 7, 10),
          weights: ModelWeights | None = None, cfg: RunConfig | None = None, tol: float = 3.0) -> list[dict]:
    """One row per grid cell: correct matches summed over ``pairs`` and wall time.

    ``pairs`` is a sequence of :class:`~gims.trainer.SynthPair`. Detection and
    description run once per image; only graph building and matching are
    repeated (and timed) per cell.
    """
    weights = weights if weights is not None else ModelWeights.identity()
    cfg = cfg or RunConfig(gnn_layers=weights.config.gnn_layers)
    plain = replace(cfg, graph_method="none")
    cached = []
    for p in pairs:
        fa = prepare_image(p.source, plain)
        fb = prepare_image(p.warped, plain)
        cached.append((fa, fb, p.H))
    rows = []
    for beta, alpha, theta in itertools.product(betas, alphas, thetas):
        cell = replace(cfg, beta=float(beta), alpha=float(alpha), theta=int(theta), graph_method="agc")
        t0 = time.perf_counter()
        correct = total = 0
        for fa0, fb0, H in cached:
            fa = attach_graph(fa0.keypoints, fa0.descriptors, fa0.size, cell)
            fb = attach_graph(fb0.keypoints, fb0.descriptors, fb0.size, cell)
            r = match_features(fa, fb, weights, cell)
            c, e = precision(r.matches, fa.positions, fb.positions, H, tol)
            correct += c
            total += e
        rows.append({"beta": beta, "alpha": alpha, "theta": theta, "correct_matches": correct,
                     "matches": total, "seconds": time.perf_counter() - t0})
    return rows
