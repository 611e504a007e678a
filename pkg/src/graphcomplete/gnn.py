"""Transductive link predictors: GCN, mean-aggregator GraphSAGE and GAT.

Each model is a stack of message-passing layers (ReLU between layers, none
after the last) followed by a parameter-free decoder
``p(i, j) = sigmoid(z_i . z_j)``. Training is full batch with binary
cross-entropy over the training edges and an equal number of freshly
sampled non-edges per epoch.

Aggregation uses CSR matrices built once per graph (:class:`GraphOps`):

* GCN: ``D^-1/2 (A + I) D^-1/2`` with ``D`` the degree of ``A + I``.
* SAGE: row-normalized ``A``; isolated nodes get a zero neighbour mean.
* GAT: softmax attention over the closed neighbourhood ``N(i) + {i}``,
  so an isolated node attends only to itself.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from . import nnkit as nk
from .evalkit import binary_metrics, roc_auc
from .graphstore import Graph, as_array
from .splitkit import NegativeSampler, TransductiveSplit, sample_negatives

log = logging.getLogger(__name__)

__all__ = [
    "GnnConfig",
    "GnnModel",
    "GraphOps",
    "gcn_forward",
    "sage_forward",
    "gat_forward",
    "gat_attention",
    "decode_link",
    "init_gnn",
    "embed",
    "gnn_loss",
    "train_gnn",
    "evaluate",
    "evaluate_pairs",
    "save_gnn",
    "load_gnn",
]

KINDS = ("gcn", "sage", "gat")


@dataclass
class GnnConfig:
    kind: str = "gcn"
    layers: int = 2
    hidden_dim: int = 128
    out_dim: int = 64
    gat_heads: int = 4
    leaky_slope: float = 0.2
    epochs: int = 200
    lr: float = 1e-2
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.layers < 1 or self.hidden_dim < 1 or self.out_dim < 1 or self.gat_heads < 1:
            raise ValueError("layers, hidden_dim, out_dim and gat_heads must be at least 1")
        if self.kind == "gat" and self.layers > 1 and self.hidden_dim % self.gat_heads:
            raise ValueError(f"hidden_dim {self.hidden_dim} is not divisible by gat_heads {self.gat_heads}")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")


class GraphOps:
    """Aggregation operators for one graph, built once and reused."""

    def __init__(self, g: Graph):
        n = g.num_nodes
        self.num_nodes = n
        deg = g.degrees().astype(np.float64)

        dinv = 1.0 / np.sqrt(deg + 1.0)
        a = g.adjacency()
        self.gcn = (sparse.diags(dinv) @ (a + sparse.identity(n, format="csr")) @ sparse.diags(dinv)).tocsr()

        inv_deg = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
        self.mean = (sparse.diags(inv_deg) @ a).tocsr()
        self.mean_t = self.mean.T.tocsr()

        closed = (a + sparse.identity(n, format="csr")).tocsr()
        closed.sort_indices()
        self.c_indptr = closed.indptr.astype(np.int64)
        self.c_rows = np.repeat(np.arange(n), np.diff(self.c_indptr))
        self.c_cols = closed.indices.astype(np.int64)

    def attention_matrix(self, alpha: np.ndarray):
        return sparse.csr_matrix((alpha, self.c_cols, self.c_indptr), shape=(self.num_nodes, self.num_nodes))


def _ops(g) -> GraphOps:
    return g if isinstance(g, GraphOps) else GraphOps(g)


def _check_rows(op: str, ops: GraphOps, H: np.ndarray) -> None:
    if H.ndim != 2 or H.shape[0] != ops.num_nodes:
        raise nk.ShapeError(f"{op}: features have shape {H.shape}, graph has {ops.num_nodes} nodes")


def gcn_forward(g, H, W, activation: bool = True) -> np.ndarray:
    ops = _ops(g)
    _check_rows("gcn_forward", ops, H)
    out = ops.gcn @ nk.matmul(H, W)
    return nk.relu(out) if activation else out


def sage_forward(g, H, W_self, W_neigh, activation: bool = True) -> np.ndarray:
    ops = _ops(g)
    _check_rows("sage_forward", ops, H)
    out = nk.matmul(H, W_self) + nk.matmul(ops.mean @ H, W_neigh)
    return nk.relu(out) if activation else out


def _segment_softmax(ops: GraphOps, logits: np.ndarray) -> np.ndarray:
    starts = ops.c_indptr[:-1]
    mx = np.maximum.reduceat(logits, starts)
    e = np.exp(logits - mx[ops.c_rows])
    return e / np.add.reduceat(e, starts)[ops.c_rows]


def _gat_head(ops: GraphOps, H, W, a, slope):
    G = nk.matmul(H, W)
    d = W.shape[1]
    if a.shape != (1, 2 * d):
        raise nk.ShapeError(f"gat_forward: attention vector has shape {a.shape}, expected (1, {2 * d})")
    el = G @ a[0, :d]
    er = G @ a[0, d:]
    pre = el[ops.c_rows] + er[ops.c_cols]
    alpha = _segment_softmax(ops, nk.leaky_relu(pre, slope))
    att = ops.attention_matrix(alpha)
    return att @ G, (H, G, pre, alpha, att)


def _gat_head_backward(ops: GraphOps, W, a, slope, cache, dOut):
    H, G, pre, alpha, att = cache
    d = W.shape[1]
    dG = att.T @ dOut
    dalpha = np.einsum("ij,ij->i", dOut[ops.c_rows], G[ops.c_cols])
    starts = ops.c_indptr[:-1]
    dot = np.add.reduceat(alpha * dalpha, starts)
    dlogit = alpha * (dalpha - dot[ops.c_rows])
    dpre = nk.leaky_relu_backward(pre, dlogit, slope)
    de_l = np.add.reduceat(dpre, starts)
    de_r = np.bincount(ops.c_cols, weights=dpre, minlength=ops.num_nodes)
    dG += np.outer(de_l, a[0, :d]) + np.outer(de_r, a[0, d:])
    da = np.concatenate([de_l @ G, de_r @ G])[None, :]
    dH, dW = nk.matmul_backward(H, W, dG)
    return dH, dW, da


def gat_attention(g, H, W, a, slope: float = 0.2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Attention weights of one head as ``(rows, cols, alpha)`` edge arrays."""
    ops = _ops(g)
    _, cache = _gat_head(ops, H, W, a, slope)
    return ops.c_rows, ops.c_cols, cache[3]


def gat_forward(g, H, Ws, As, slope: float = 0.2, concat: bool = True, activation: bool = True) -> np.ndarray:
    """Multi-head attention layer; heads are concatenated or averaged."""
    ops = _ops(g)
    _check_rows("gat_forward", ops, H)
    outs = [_gat_head(ops, H, W, a, slope)[0] for W, a in zip(Ws, As)]
    out = np.hstack(outs) if concat else np.mean(outs, axis=0)
    return nk.relu(out) if activation else out


def decode_link(Z, i, j):
    """``sigmoid(z_i . z_j)``; ``i`` and ``j`` may be index arrays."""
    Z = np.asarray(Z, dtype=np.float64)
    i, j = np.asarray(i), np.asarray(j)
    return nk.sigmoid(np.sum(Z[i] * Z[j], axis=-1))


class GnnModel:
    def __init__(self, config: GnnConfig, params: nk.ParamStore, in_dim: int):
        self.config = config
        self.params = params
        self.in_dim = int(in_dim)

    def layer_dims(self) -> list[tuple[int, int]]:
        return _layer_dims(self.config, self.in_dim)


def _layer_dims(cfg: GnnConfig, in_dim: int) -> list[tuple[int, int]]:
    dims = [in_dim] + [cfg.hidden_dim] * (cfg.layers - 1) + [cfg.out_dim]
    return list(zip(dims[:-1], dims[1:]))


def init_gnn(cfg: GnnConfig, in_dim: int) -> GnnModel:
    rng = np.random.default_rng(cfg.seed)
    p = nk.ParamStore()
    dims = _layer_dims(cfg, in_dim)
    for l, (din, dout) in enumerate(dims):
        last = l == len(dims) - 1
        if cfg.kind == "gcn":
            p.add(f"l{l}.W", nk.glorot(rng, din, dout))
        elif cfg.kind == "sage":
            p.add(f"l{l}.W_self", nk.glorot(rng, din, dout))
            p.add(f"l{l}.W_neigh", nk.glorot(rng, din, dout))
        else:
            dh = dout if last else dout // cfg.gat_heads
            for h in range(cfg.gat_heads):
                p.add(f"l{l}.h{h}.W", nk.glorot(rng, din, dh))
                p.add(f"l{l}.h{h}.a", nk.glorot(rng, 1, 2 * dh))
    return GnnModel(cfg, p, in_dim)


def _forward(m: GnnModel, ops: GraphOps, X: np.ndarray):
    cfg, p = m.config, m.params
    if X.shape != (ops.num_nodes, m.in_dim):
        raise nk.ShapeError(f"features have shape {X.shape}, expected ({ops.num_nodes}, {m.in_dim})")
    caches = []
    H = X
    L = cfg.layers
    for l in range(L):
        last = l == L - 1
        if cfg.kind == "gcn":
            HW = H @ p[f"l{l}.W"]
            pre = ops.gcn @ HW
            caches.append((H, pre))
        elif cfg.kind == "sage":
            M = ops.mean @ H
            pre = H @ p[f"l{l}.W_self"] + M @ p[f"l{l}.W_neigh"]
            caches.append((H, M, pre))
        else:
            heads = [_gat_head(ops, H, p[f"l{l}.h{h}.W"], p[f"l{l}.h{h}.a"], cfg.leaky_slope)
                     for h in range(cfg.gat_heads)]
            outs = [o for o, _ in heads]
            pre = np.mean(outs, axis=0) if last else np.hstack(outs)
            caches.append((H, [c for _, c in heads], pre))
        H = pre if last else nk.relu(pre)
    return H, caches


def _backward(m: GnnModel, ops: GraphOps, caches, dZ: np.ndarray) -> None:
    cfg, p = m.config, m.params
    dH = dZ
    for l in reversed(range(cfg.layers)):
        last = l == cfg.layers - 1
        pre = caches[l][-1]
        dpre = dH if last else nk.relu_backward(pre, dH)
        if cfg.kind == "gcn":
            H, _ = caches[l]
            dHW = ops.gcn.T @ dpre
            dH, dW = nk.matmul_backward(H, p[f"l{l}.W"], dHW)
            p.accumulate(f"l{l}.W", dW)
        elif cfg.kind == "sage":
            H, M, _ = caches[l]
            dH, dWs = nk.matmul_backward(H, p[f"l{l}.W_self"], dpre)
            dM, dWn = nk.matmul_backward(M, p[f"l{l}.W_neigh"], dpre)
            dH = dH + ops.mean_t @ dM
            p.accumulate(f"l{l}.W_self", dWs)
            p.accumulate(f"l{l}.W_neigh", dWn)
        else:
            H, head_caches, _ = caches[l]
            k = cfg.gat_heads
            if last:
                parts = [dpre / k] * k
            else:
                parts = np.split(dpre, k, axis=1)
            dH = np.zeros_like(H)
            for h in range(k):
                W, a = p[f"l{l}.h{h}.W"], p[f"l{l}.h{h}.a"]
                dHh, dW, da = _gat_head_backward(ops, W, a, cfg.leaky_slope, head_caches[h], parts[h])
                dH += dHh
                p.accumulate(f"l{l}.h{h}.W", dW)
                p.accumulate(f"l{l}.h{h}.a", da)


def embed(m: GnnModel, g, X) -> np.ndarray:
    """Node embeddings ``Z`` after message passing over ``g``."""
    return _forward(m, _ops(g), as_array(X))[0]


def gnn_loss(m: GnnModel, g, X, pos_pairs, neg_pairs) -> float:
    """Mean BCE of the dot-product decoder; gradients go into ``m.params``."""
    ops = _ops(g)
    Z, caches = _forward(m, ops, as_array(X))
    pairs = np.concatenate([np.asarray(pos_pairs, np.int64).reshape(-1, 2),
                            np.asarray(neg_pairs, np.int64).reshape(-1, 2)])
    if len(pairs) == 0:
        raise ValueError("gnn_loss needs at least one pair")
    labels = np.concatenate([np.ones(len(pos_pairs)), np.zeros(len(neg_pairs))])
    logits = np.sum(Z[pairs[:, 0]] * Z[pairs[:, 1]], axis=1)
    loss = float(np.mean(np.where(labels == 1, nk.softplus(-logits), nk.softplus(logits))))
    dlogit = (nk.sigmoid(logits) - labels) / len(pairs)
    dZ = np.zeros_like(Z)
    np.add.at(dZ, pairs[:, 0], dlogit[:, None] * Z[pairs[:, 1]])
    np.add.at(dZ, pairs[:, 1], dlogit[:, None] * Z[pairs[:, 0]])
    _backward(m, ops, caches, dZ)
    return loss


def train_gnn(split: TransductiveSplit, X, cfg: GnnConfig):
    """Train on ``split.train_graph``; returns the best-validation model and history."""
    Xa = as_array(X)
    g = split.train_graph
    if Xa.shape[0] != g.num_nodes:
        raise nk.ShapeError(f"features cover {Xa.shape[0]} nodes, graph has {g.num_nodes}")
    ops = GraphOps(g)
    m = init_gnn(cfg, Xa.shape[1])
    state = nk.AdamState(lr=cfg.lr)
    pos = np.asarray(split.train_pos, np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("no training edges")
    val_pairs = np.concatenate([split.val_pos, split.val_neg]).astype(np.int64).reshape(-1, 2)
    val_labels = np.concatenate([np.ones(len(split.val_pos)), np.zeros(len(split.val_neg))])
    has_val = len(split.val_pos) > 0 and len(split.val_neg) > 0

    history = []
    best_auc, best_snap = -np.inf, None
    for epoch in range(cfg.epochs):
        neg = sample_negatives(NegativeSampler(cfg.seed + epoch), g, len(pos))
        m.params.zero_grad()
        loss = gnn_loss(m, ops, Xa, pos, neg)
        if not np.isfinite(loss):
            raise FloatingPointError(f"GNN loss became non-finite at epoch {epoch}")
        nk.adam_step(m.params, state)
        row = {"epoch": epoch, "loss": loss, "val_auc": float("nan")}
        if has_val and (epoch % cfg.eval_every == 0 or epoch == cfg.epochs - 1):
            Z = _forward(m, ops, Xa)[0]
            row["val_auc"] = roc_auc(decode_link(Z, val_pairs[:, 0], val_pairs[:, 1]), val_labels)
            if row["val_auc"] > best_auc:
                best_auc, best_snap = row["val_auc"], m.params.snapshot()
        history.append(row)
        log.debug("%s epoch %d loss %.5f val_auc %.4f", cfg.kind, epoch, loss, row["val_auc"])
    if best_snap is not None:
        m.params.restore(best_snap)
    return m, history


def evaluate_pairs(m: GnnModel, g, X, pos, neg, threshold: float = 0.5) -> dict:
    pos = np.asarray(pos, np.int64).reshape(-1, 2)
    neg = np.asarray(neg, np.int64).reshape(-1, 2)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("empty evaluation set")
    Z = embed(m, g, X)
    out = binary_metrics(decode_link(Z, pos[:, 0], pos[:, 1]), decode_link(Z, neg[:, 0], neg[:, 1]), threshold)
    out["num_pos"], out["num_neg"] = len(pos), len(neg)
    return out


def evaluate(m: GnnModel, split: TransductiveSplit, X, which: str = "test") -> dict:
    """Accuracy (threshold 0.5), ROC-AUC and AP on the split's fixed pairs."""
    pos, neg = getattr(split, f"{which}_pos"), getattr(split, f"{which}_neg")
    return evaluate_pairs(m, split.train_graph, X, pos, neg)


def save_gnn(m: GnnModel, path) -> None:
    path = Path(path)
    nk.save_checkpoint(m.params, path)
    meta = {"model": "gnn", "config": asdict(m.config), "in_dim": m.in_dim}
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def load_gnn(path) -> GnnModel:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("model") != "gnn":
        raise ValueError(f"{path}: sidecar does not describe a GNN model")
    return GnnModel(GnnConfig(**meta["config"]), nk.load_checkpoint(path), meta["in_dim"])
