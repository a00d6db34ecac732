"""Score matrix with dustbins, log-domain Sinkhorn and mutual-max match extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .core import MatchSet

DEFAULT_ITERS = 100
DEFAULT_TEMPERATURE = 1.0
DEFAULT_MIN_CONF = 0.2


@dataclass(frozen=True)
class ScoreMatrix:
    scores: np.ndarray     # (m, n)
    augmented: np.ndarray  # (m+1, n+1); last row/column hold the dustbin score


@dataclass(frozen=True)
class Assignment:
    plan: np.ndarray        # (m+1, n+1) nonnegative
    log_plan: np.ndarray
    iterations: int
    residual: float


def augment_t(S: ad.Tensor, z: ad.Tensor) -> ad.Tensor:
    """Append a dustbin row and column filled with the scalar ``z``."""
    m, n = S.shape
    col = ad.broadcast_to(ad.reshape(z, (1, 1)), (m, 1))
    row = ad.broadcast_to(ad.reshape(z, (1, 1)), (1, n + 1))
    return ad.concat([ad.concat([S, col], axis=1), row], axis=0)


def log_marginals(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows carry unit mass plus ``n`` on the dustbin row; columns likewise with ``m``."""
    log_a = np.zeros(m + 1)
    log_b = np.zeros(n + 1)
    log_a[m] = np.log(n) if n > 0 else -np.inf
    log_b[n] = np.log(m) if m > 0 else -np.inf
    return log_a, log_b


def sinkhorn_t(S_aug: ad.Tensor, iters: int = DEFAULT_ITERS,
               temperature: float = DEFAULT_TEMPERATURE) -> ad.Tensor:
    """Differentiable log-domain Sinkhorn; returns the log transport plan.

    Every executed iteration is part of the autodiff graph.
    """
    m, n = S_aug.shape[0] - 1, S_aug.shape[1] - 1
    log_a, log_b = log_marginals(m, n)
    Z = S_aug * (1.0 / temperature)
    u = ad.Tensor(np.zeros((m + 1, 1)))
    v = ad.Tensor(np.zeros((1, n + 1)))
    la = ad.Tensor(log_a[:, None])
    lb = ad.Tensor(log_b[None, :])
    for _ in range(iters):
        u = la - ad.logsumexp(Z + v, axis=1, keepdims=True)
        v = lb - ad.logsumexp(Z + u, axis=0, keepdims=True)
    return Z + u + v


def score_matrix(fa, fb, z: float = 1.0) -> ScoreMatrix:
    fa = np.asarray(fa, dtype=np.float64)
    fb = np.asarray(fb, dtype=np.float64)
    if fa.shape[1] != fb.shape[1]:
        raise ValueError(f"descriptor dimensions differ: {fa.shape[1]} vs {fb.shape[1]}")
    S = fa @ fb.T
    aug = augment_t(ad.Tensor(S), ad.Tensor(z)).data
    return ScoreMatrix(S, aug)


def marginal_residual(plan: np.ndarray) -> float:
    m, n = plan.shape[0] - 1, plan.shape[1] - 1
    a = np.ones(m + 1)
    a[m] = n
    b = np.ones(n + 1)
    b[n] = m
    return float(max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max()))


def sinkhorn(S_aug, iters: int = DEFAULT_ITERS, temperature: float = DEFAULT_TEMPERATURE) -> Assignment:
    S_aug = getattr(S_aug, "augmented", S_aug)
    S_aug = np.asarray(S_aug, dtype=np.float64)
    if not np.all(np.isfinite(S_aug)):
        raise ValueError("score matrix must be finite")
    log_plan = sinkhorn_t(ad.Tensor(S_aug), iters, temperature).data
    plan = np.exp(log_plan)
    return Assignment(plan, log_plan, iters, marginal_residual(plan))


def extract_matches(plan, min_conf: float = DEFAULT_MIN_CONF) -> MatchSet:
    """Keep (i, j) when it is the strict maximum of its row and its column
    (dustbins excluded) and its mass reaches ``min_conf``."""
    Q = getattr(plan, "plan", plan)
    Q = np.asarray(Q, dtype=np.float64)[:-1, :-1]
    m, n = Q.shape
    if m == 0 or n == 0:
        return MatchSet.empty()
    row_best = Q.argmax(axis=1)
    col_best = Q.argmax(axis=0)
    row_max = Q[np.arange(m), row_best]
    col_max = Q[col_best, np.arange(n)]
    row_unique = (Q == row_max[:, None]).sum(axis=1) == 1
    col_unique = (Q == col_max[None, :]).sum(axis=0) == 1
    ia = np.arange(m)
    keep = (col_best[row_best] == ia) & row_unique & col_unique[row_best] & (row_max >= min_conf)
    ia = ia[keep]
    jb = row_best[keep]
    return MatchSet(ia, jb, np.clip(Q[ia, jb], 0.0, 1.0))
