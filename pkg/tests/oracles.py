"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's algorithms; only plain loops, sets and
``numpy`` primitives.
"""

from __future__ import annotations

import math

import numpy as np


def pairs_within_radius(points, r) -> set[tuple[int, int]]:
    P = np.asarray(points, dtype=float)
    out = set()
    for i in range(len(P)):
        for j in range(i + 1, len(P)):
            if math.dist(P[i], P[j]) < r:
                out.add((i, j))
    return out


def nearest_neighbor(points, q) -> int:
    P = np.asarray(points, dtype=float)
    best, best_d = -1, math.inf
    for j in range(len(P)):
        if j == q:
            continue
        d = (P[j, 0] - P[q, 0]) ** 2 + (P[j, 1] - P[q, 1]) ** 2
        if d < best_d:
            best, best_d = j, d
    return best


def cosine(a, b) -> float:
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b)) / (na * nb)))


def components(n, edges) -> list[set[int]]:
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, comps = set(), []
    for s in range(n):
        if s in seen:
            continue
        stack, comp = [s], set()
        while stack:
            v = stack.pop()
            if v in comp:
                continue
            comp.add(v)
            stack.extend(adj[v] - comp)
        seen |= comp
        comps.append(comp)
    return comps


def agc(points, desc, beta, alpha, theta):
    """Returns ``(edges, kept_ids, gamma, coarse_edges)`` following the construction step by step."""
    P = np.asarray(points, dtype=float)
    D = np.asarray(desc, dtype=float)
    n = len(P)
    cand = sorted(pairs_within_radius(P, beta))
    cos = {e: cosine(D[e[0]], D[e[1]]) for e in cand}
    gamma = float(np.percentile(list(cos.values()), alpha)) if cand else None
    coarse = {e for e in cand if gamma is not None and cos[e] >= gamma}
    edges = set(coarse)
    deg = [0] * n
    for a, b in coarse:
        deg[a] += 1
        deg[b] += 1
    if n >= 2:
        for i in range(n):
            if deg[i] == 0:
                j = nearest_neighbor(P, i)
                edges.add((min(i, j), max(i, j)))
    comps = components(n, edges)
    big = [c for c in comps if len(c) >= theta]
    if big:
        keep = set().union(*big)
    else:
        keep = max(comps, key=lambda c: (len(c), -min(c)))
    kept = sorted(keep)
    new_id = {old: k for k, old in enumerate(kept)}
    edges = {(new_id[a], new_id[b]) for a, b in edges if a in keep and b in keep}
    Q = P[kept]
    while True:
        comps = sorted(components(len(kept), edges), key=min)
        if len(comps) <= 1:
            break
        cent = [Q[sorted(c)].mean(axis=0) for c in comps]
        best = None
        for x in range(len(comps)):
            for y in range(x + 1, len(comps)):
                d = float(((cent[x] - cent[y]) ** 2).sum())
                if best is None or d < best[0]:
                    best = (d, x, y)
        _, x, y = best
        bv = None
        for u in sorted(comps[x]):
            for v in sorted(comps[y]):
                d = float(((Q[u] - Q[v]) ** 2).sum())
                if bv is None or d < bv[0]:
                    bv = (d, u, v)
        _, u, v = bv
        edges.add((min(u, v), max(u, v)))
    return edges, kept, gamma, coarse


def graphsage(h, n, edges, W):
    h = np.asarray(h, dtype=float)
    nbr = {i: {i} for i in range(n)}
    for a, b in edges:
        nbr[a].add(b)
        nbr[b].add(a)
    out = np.zeros((n, W.shape[0]))
    for i in range(n):
        m = sum(h[j] for j in nbr[i]) / len(nbr[i])
        for r in range(W.shape[0]):
            out[i, r] = max(0.0, sum(W[r, c] * m[c] for c in range(len(m))))
    return out


def _linear(x, W, b=None):
    y = np.array([[sum(W[r, c] * row[c] for c in range(W.shape[1])) for r in range(W.shape[0])] for row in x])
    return y if b is None else y + b


def multihead(x, src, Wq, Wk, Wv, Wo, heads):
    q, k, v = _linear(x, Wq), _linear(src, Wk), _linear(src, Wv)
    D = x.shape[1]
    dh = D // heads
    out = np.zeros((len(x), D))
    for hd in range(heads):
        sl = slice(hd * dh, (hd + 1) * dh)
        for i in range(len(x)):
            logits = [float(np.dot(q[i, sl], k[j, sl])) / math.sqrt(dh) for j in range(len(src))]
            mx = max(logits)
            ex = [math.exp(a - mx) for a in logits]
            s = sum(ex)
            out[i, sl] = sum((ex[j] / s) * v[j, sl] for j in range(len(src)))
    return _linear(out, Wo)


def attention_layer(xa, xb, p, kind, heads):
    sa, sb = (xa, xb) if kind == "self" else (xb, xa)
    ma = multihead(xa, sa, p["Wq"], p["Wk"], p["Wv"], p["Wo"], heads)
    mb = multihead(xb, sb, p["Wq"], p["Wk"], p["Wv"], p["Wo"], heads)

    def upd(x, m):
        hidden = np.maximum(_linear(np.concatenate([x, m], axis=1), p["mlp0.W"], p["mlp0.b"]), 0.0)
        return x + _linear(hidden, p["mlp1.W"], p["mlp1.b"])

    return upd(xa, ma), upd(xb, mb)


def score_matrix(fa, fb):
    return np.array([[sum(x * y for x, y in zip(a, b)) for b in fb] for a in fa])


def nll(plan, pairs, unmatched_a, unmatched_b):
    m, n = plan.shape[0] - 1, plan.shape[1] - 1
    cells = [(i, j) for i, j in pairs] + [(i, n) for i in unmatched_a] + [(m, j) for j in unmatched_b]
    if not cells:
        return 0.0
    return -sum(math.log(max(plan[i, j], 1e-12)) for i, j in cells) / len(cells)


def greedy_pairing(proj, pb, eps, valid):
    """Globally closest pair first, each point used once, distance < eps."""
    cand = []
    for i in valid:
        for j in range(len(pb)):
            d = math.dist(proj[i], pb[j])
            if d < eps:
                cand.append((d, i, j))
    cand.sort()
    used_a, used_b, out = set(), set(), set()
    for d, i, j in cand:
        if i not in used_a and j not in used_b:
            used_a.add(i)
            used_b.add(j)
            out.add((i, j))
    return out


def rel_err(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(np.abs(b).max() if b.size else 0.0, 1e-300)
    return float(np.abs(a - b).max() / scale) if a.size else 0.0
