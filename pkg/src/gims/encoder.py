"""Vertex encoder: mean-aggregation GraphSAGE, positional MLP and self/cross attention.

The ``*_t`` functions operate on :class:`~gims.autodiff.Tensor` values and are
what training differentiates through; the public functions wrap them for
plain numpy inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import autodiff as ad
from .core import Graph


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = 128
    gnn_layers: int = 3
    heads: int = 4
    attention: tuple[str, ...] = ("self", "cross") * 4
    pos_hidden: tuple[int, int] = (32, 64)

    def __post_init__(self):
        if self.gnn_layers < 0:
            raise ValueError("gnn_layers must be >= 0")
        if self.dim % self.heads:
            raise ValueError(f"dim {self.dim} is not divisible by {self.heads} heads")
        bad = [k for k in self.attention if k not in ("self", "cross")]
        if bad:
            raise ValueError(f"unknown attention layer kinds {bad}")
        object.__setattr__(self, "attention", tuple(self.attention))
        object.__setattr__(self, "pos_hidden", tuple(self.pos_hidden))

    def as_dict(self) -> dict:
        return {"dim": self.dim, "gnn_layers": self.gnn_layers, "heads": self.heads,
                "attention": list(self.attention), "pos_hidden": list(self.pos_hidden)}


def parameter_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, ...]]:
    D = cfg.dim
    shapes: dict[str, tuple[int, ...]] = {}
    for l in range(cfg.gnn_layers):
        shapes[f"gnn.{l}.W"] = (D, D)
    widths = (2, *cfg.pos_hidden, D)
    for k in range(len(widths) - 1):
        shapes[f"pos.{k}.W"] = (widths[k + 1], widths[k])
        shapes[f"pos.{k}.b"] = (widths[k + 1],)
    for a in range(len(cfg.attention)):
        for p in ("q", "k", "v", "o"):
            shapes[f"attn.{a}.W{p}"] = (D, D)
        shapes[f"attn.{a}.mlp0.W"] = (2 * D, 2 * D)
        shapes[f"attn.{a}.mlp0.b"] = (2 * D,)
        shapes[f"attn.{a}.mlp1.W"] = (D, 2 * D)
        shapes[f"attn.{a}.mlp1.b"] = (D,)
    shapes["dustbin"] = ()
    return shapes


@dataclass
class ModelWeights:
    config: EncoderConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shapes = parameter_shapes(self.config)
        if set(shapes) != set(self.params):
            missing = sorted(set(shapes) - set(self.params))
            extra = sorted(set(self.params) - set(shapes))
            raise ValueError(f"weights do not match config (missing {missing[:4]}, unexpected {extra[:4]})")
        clean = {}
        for name, shape in shapes.items():
            arr = np.array(self.params[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")
            clean[name] = arr
        self.params = clean

    @classmethod
    def random(cls, cfg: EncoderConfig = EncoderConfig(), seed: int = 0, dustbin: float = 1.0) -> "ModelWeights":
        """Glorot-uniform matrices, zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in parameter_shapes(cfg).items():
            if len(shape) == 2:
                a = math.sqrt(6.0 / (shape[0] + shape[1]))
                params[name] = rng.uniform(-a, a, size=shape)
            else:
                params[name] = np.zeros(shape)
        params["dustbin"] = np.array(float(dustbin))
        return cls(cfg, params)

    @classmethod
    def identity(cls, cfg: EncoderConfig = EncoderConfig(gnn_layers=0), dustbin: float = 0.0) -> "ModelWeights":
        """GraphSAGE matrices set to I; positional, attention and dustbin weights zero.

        With the default ``gnn_layers=0`` the encoder passes descriptors through
        unchanged.
        """
        params = {name: np.zeros(shape) for name, shape in parameter_shapes(cfg).items()}
        for l in range(cfg.gnn_layers):
            params[f"gnn.{l}.W"] = np.eye(cfg.dim)
        params["dustbin"] = np.array(float(dustbin))
        return cls(cfg, params)

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.config, {k: v.copy() for k, v in self.params.items()})

    def tensors(self, requires_grad: bool = False) -> dict[str, ad.Tensor]:
        return {k: ad.Tensor(v.copy(), requires_grad=requires_grad) for k, v in self.params.items()}

    def num_parameters(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def gnn_matrices(self) -> list[np.ndarray]:
        return [self.params[f"gnn.{l}.W"] for l in range(self.config.gnn_layers)]


def mean_aggregator(g: Graph) -> sparse.csr_matrix:
    """Row-normalized ``A + I``: row i averages vertex i with its neighbours."""
    n = g.n
    e = g.edges
    rows = np.concatenate([np.arange(n), e[:, 0], e[:, 1]])
    cols = np.concatenate([np.arange(n), e[:, 1], e[:, 0]])
    M = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    M.data[:] = 1.0
    deg = np.asarray(M.sum(axis=1)).reshape(-1)
    return sparse.diags(1.0 / deg) @ M


# ---- differentiable building blocks ---------------------------------------------------

def linear_t(x, W, b=None):
    y = ad.matmul(x, ad.transpose(W))
    return y if b is None else y + b


def graphsage_t(h, M, W):
    return ad.relu(linear_t(ad.const_matmul(M, h), W))


def gnn_t(h, M, P: dict, layers: int):
    for l in range(layers):
        h = graphsage_t(h, M, P[f"gnn.{l}.W"])
    return h


def normalize_positions(pos: np.ndarray, size) -> np.ndarray:
    w, h = size
    return np.asarray(pos, dtype=np.float64) * np.array([2.0 / w, 2.0 / h]) - 1.0


def position_t(f, pos_norm: np.ndarray, P: dict, depth: int = 3):
    x = ad.Tensor(pos_norm)
    for k in range(depth):
        x = linear_t(x, P[f"pos.{k}.W"], P[f"pos.{k}.b"])
        if k < depth - 1:
            x = ad.relu(x)
    return f + x


def multihead_t(x, src, P: dict, prefix: str, heads: int):
    """Scaled dot-product attention of ``x`` (queries) over ``src`` (keys/values)."""
    n, D = x.shape
    m = src.shape[0]
    dh = D // heads

    def split(t, rows):
        return ad.transpose(ad.reshape(t, (rows, heads, dh)), (1, 0, 2))

    q = split(linear_t(x, P[prefix + "Wq"]), n)
    k = split(linear_t(src, P[prefix + "Wk"]), m)
    v = split(linear_t(src, P[prefix + "Wv"]), m)
    logits = ad.matmul(q, ad.transpose(k, (0, 2, 1))) * (1.0 / math.sqrt(dh))
    att = ad.softmax(logits, axis=-1)
    out = ad.reshape(ad.transpose(ad.matmul(att, v), (1, 0, 2)), (n, D))
    return linear_t(out, P[prefix + "Wo"])


def residual_update_t(x, msg, P: dict, prefix: str):
    hidden = ad.relu(linear_t(ad.concat([x, msg], axis=1), P[prefix + "mlp0.W"], P[prefix + "mlp0.b"]))
    return x + linear_t(hidden, P[prefix + "mlp1.W"], P[prefix + "mlp1.b"])


def attention_t(xa, xb, P: dict, layers, heads: int):
    for a, kind in enumerate(layers):
        pre = f"attn.{a}."
        src_a, src_b = (xa, xb) if kind == "self" else (xb, xa)
        ma = multihead_t(xa, src_a, P, pre, heads)
        mb = multihead_t(xb, src_b, P, pre, heads)
        xa, xb = residual_update_t(xa, ma, P, pre), residual_update_t(xb, mb, P, pre)
    return xa, xb


@dataclass(frozen=True)
class GraphInput:
    """One side of a matching problem: features, graph and image geometry."""

    features: np.ndarray
    graph: Graph
    positions: np.ndarray
    size: tuple[float, float]

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 2 or len(f) != self.graph.n or len(self.positions) != self.graph.n:
            raise ValueError("features, graph and positions disagree on vertex count")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=np.float64).reshape(-1, 2))

    @property
    def aggregator(self):
        return mean_aggregator(self.graph)


def encode_pair_t(a: GraphInput, b: GraphInput, P: dict, cfg: EncoderConfig):
    sides = []
    for s in (a, b):
        h = gnn_t(ad.Tensor(s.features), s.aggregator, P, cfg.gnn_layers)
        h = position_t(h, normalize_positions(s.positions, s.size), P, len(cfg.pos_hidden) + 1)
        sides.append(h)
    return attention_t(sides[0], sides[1], P, cfg.attention, cfg.heads)


# ---- numpy-facing API ----------------------------------------------------------------

def _const(params: dict) -> dict:
    return {k: ad.Tensor(v) for k, v in params.items()}


def graphsage_layer(h, g: Graph, W) -> np.ndarray:
    """relu(W . mean({h_i} U {h_j : j in N(i)})) for every vertex."""
    return graphsage_t(ad.Tensor(h), mean_aggregator(g), ad.Tensor(W)).data


def encode_gnn(f, g: Graph, weights, L: int | None = None) -> np.ndarray:
    mats = weights.gnn_matrices() if isinstance(weights, ModelWeights) else list(weights)
    L = len(mats) if L is None else L
    if len(mats) != L:
        raise ValueError(f"{len(mats)} GraphSAGE weight matrices for L={L}")
    data = getattr(f, "data", f)
    M = mean_aggregator(g)
    h = ad.Tensor(data)
    for W in mats:
        h = graphsage_t(h, M, ad.Tensor(W))
    return h.data


def encode_position(f_in, positions, size, weights: ModelWeights) -> np.ndarray:
    P = _const(weights.params)
    depth = len(weights.config.pos_hidden) + 1
    return position_t(ad.Tensor(f_in), normalize_positions(positions, size), P, depth).data


def attention_stack(xa, xb, weights: ModelWeights, layers=None) -> tuple[np.ndarray, np.ndarray]:
    cfg = weights.config
    layers = cfg.attention if layers is None else tuple(layers)
    if len(layers) > len(cfg.attention):
        raise ValueError("more attention layers requested than the weights provide")
    ya, yb = attention_t(ad.Tensor(xa), ad.Tensor(xb), _const(weights.params), layers, cfg.heads)
    return ya.data, yb.data


def encode_pair(a: GraphInput, b: GraphInput, weights: ModelWeights) -> tuple[np.ndarray, np.ndarray]:
    fa, fb = encode_pair_t(a, b, _const(weights.params), weights.config)
    return fa.data, fb.data
