"""Dual-encoder inductive link predictor.

An attribute encoder maps node features to embeddings and a structure
table holds one free embedding per training node. Both are trained so
that linked nodes score higher than sampled non-links under cosine
similarity, while each node's two embeddings are pulled together. At
inference only the attribute side is needed, which is what makes the
model usable on nodes never seen in training.

Loss::

    L = l_aa * R(s_aa) + l_ss * R(s_ss) + l_align * A + l_bce * B
    R(s) = mean_k log(1 + exp(-theta * (s(pos_k) - s(neg_k))))
    A    = mean_i (1 - cos(ha_i, hs_i))
    B    = binary cross-entropy of sigmoid(a * s_aa + c)

``a`` and ``c`` are scalar calibration parameters that turn cosine scores
into link probabilities usable with absolute thresholds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import nnkit as nk
from .evalkit import binary_metrics, roc_auc
from .graphstore import Graph, as_array
from .splitkit import NegativeSampler, sample_negatives

log = logging.getLogger(__name__)

__all__ = [
    "DealConfig",
    "DealModel",
    "init_deal",
    "encode_attr",
    "score_components",
    "link_probability",
    "pair_probabilities",
    "deal_loss",
    "train_deal",
    "fit_calibration",
    "evaluate_deal",
    "save_deal",
    "load_deal",
]


@dataclass
class DealConfig:
    encoder_kind: str = "mlp"
    embed_dim: int = 64
    mlp_hidden: int = 256
    lambda_aa: float = 1.0
    lambda_ss: float = 1.0
    lambda_align: float = 1.0
    lambda_bce: float = 0.1
    theta_r: float = 10.0
    epochs: int = 200
    lr: float = 5e-3
    seed: int = 0
    w_attr: float = 1.0
    w_cross: float = 0.0
    w_struct: float = 1.0
    eval_every: int = 1
    calibrate: bool = True

    def __post_init__(self):
        if self.encoder_kind not in ("mlp", "embedding"):
            raise ValueError(f"encoder_kind must be 'mlp' or 'embedding', got {self.encoder_kind!r}")
        for name in ("lambda_aa", "lambda_ss", "lambda_align", "lambda_bce", "w_attr", "w_cross", "w_struct"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("embed_dim", "mlp_hidden", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


class DealModel:
    """Attribute encoder, structure table and calibration scalars.

    ``node_ids[r]`` is the original graph id owning structure row ``r``.
    """

    def __init__(self, config: DealConfig, params: nk.ParamStore, node_ids, in_dim: int):
        self.config = config
        self.params = params
        self.node_ids = np.asarray(node_ids, dtype=np.int64)
        self.in_dim = int(in_dim)
        order = np.argsort(self.node_ids, kind="stable")
        self._sorted_ids = self.node_ids[order]
        self._sorted_rows = order

    @property
    def a(self) -> float:
        return float(self.params["calib.a"][0, 0])

    @property
    def c(self) -> float:
        return float(self.params["calib.c"][0, 0])

    def struct_rows(self, ids) -> np.ndarray:
        """Structure-table row per original id, ``-1`` where absent."""
        ids = np.asarray(ids, dtype=np.int64)
        if self._sorted_ids.size == 0:
            return np.full(ids.shape, -1)
        pos = np.minimum(np.searchsorted(self._sorted_ids, ids), self._sorted_ids.size - 1)
        return np.where(self._sorted_ids[pos] == ids, self._sorted_rows[pos], -1)

    def copy(self) -> "DealModel":
        return DealModel(self.config, self.params.copy(), self.node_ids.copy(), self.in_dim)


def init_deal(cfg: DealConfig, in_dim: int, node_ids, seed: int | None = None) -> DealModel:
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    node_ids = np.asarray(node_ids, dtype=np.int64)
    d = cfg.embed_dim
    p = nk.ParamStore()
    if cfg.encoder_kind == "mlp":
        p.add("attr.W1", nk.glorot(rng, in_dim, cfg.mlp_hidden))
        p.add("attr.b1", np.zeros((1, cfg.mlp_hidden)))
        p.add("attr.W2", nk.glorot(rng, cfg.mlp_hidden, d))
        p.add("attr.b2", np.zeros((1, d)))
    else:
        p.add("attr.E", nk.glorot(rng, in_dim, d))
    p.add("struct.S", nk.glorot(rng, max(node_ids.size, 1), d)[:node_ids.size])
    p.add("calib.a", [[4.0]])
    p.add("calib.c", [[0.0]])
    return DealModel(cfg, p, node_ids, in_dim)


def _attr_forward(m: DealModel, X: np.ndarray):
    if X.ndim != 2 or X.shape[1] != m.in_dim:
        raise nk.ShapeError(f"encode_attr: features have shape {X.shape}, encoder expects dim {m.in_dim}")
    p = m.params
    if m.config.encoder_kind == "mlp":
        pre = nk.add_bias(nk.matmul(X, p["attr.W1"]), p["attr.b1"])
        hid = nk.relu(pre)
        out = nk.add_bias(nk.matmul(hid, p["attr.W2"]), p["attr.b2"])
        return out, (X, pre, hid)
    return nk.matmul(X, p["attr.E"]), (X,)


def _attr_backward(m: DealModel, cache, dH: np.ndarray) -> None:
    p = m.params
    if m.config.encoder_kind == "mlp":
        X, pre, hid = cache
        dhid_lin, db2 = nk.add_bias_backward(dH)
        dhid, dW2 = nk.matmul_backward(hid, p["attr.W2"], dhid_lin)
        dpre = nk.relu_backward(pre, dhid)
        _, db1 = nk.add_bias_backward(dpre)
        _, dW1 = nk.matmul_backward(X, p["attr.W1"], dpre)
        p.accumulate("attr.W1", dW1)
        p.accumulate("attr.b1", db1)
        p.accumulate("attr.W2", dW2)
        p.accumulate("attr.b2", db2)
    else:
        (X,) = cache
        _, dE = nk.matmul_backward(X, p["attr.E"], dH)
        p.accumulate("attr.E", dE)


def encode_attr(m: DealModel, X) -> np.ndarray:
    """Attribute embeddings, one row per feature row."""
    return _attr_forward(m, as_array(X))[0]


def score_components(m: DealModel | None, ha_i, ha_j, hs_i=None, hs_j=None) -> dict:
    """Cosine scores for row-aligned embedding batches.

    Returns ``s_aa``, ``s_ss`` and ``s_cross``; the last two are ``None``
    when structure embeddings are not supplied.
    """
    ha_i, ha_j = np.atleast_2d(ha_i), np.atleast_2d(ha_j)
    out = {"s_aa": nk.cosine_rows(ha_i, ha_j), "s_ss": None, "s_cross": None}
    if hs_i is not None and hs_j is not None:
        hs_i, hs_j = np.atleast_2d(hs_i), np.atleast_2d(hs_j)
        out["s_ss"] = nk.cosine_rows(hs_i, hs_j)
        out["s_cross"] = 0.5 * (nk.cosine_rows(ha_i, hs_j) + nk.cosine_rows(hs_i, ha_j))
    return out


def _combine(m: DealModel, comps: dict, mode: str, has_struct: np.ndarray) -> np.ndarray:
    cfg = m.config
    s = cfg.w_attr * comps["s_aa"]
    if comps["s_cross"] is not None and cfg.w_cross > 0:
        s = s + cfg.w_cross * np.where(has_struct, comps["s_cross"], 0.0)
    if mode == "full":
        s = s + cfg.w_struct * comps["s_ss"]
    return s


def pair_probabilities(m: DealModel, X, pairs, mode: str = "inductive", H=None) -> np.ndarray:
    """Link probabilities ``sigmoid(a * s + c)`` for ``(i, j)`` rows in original ids.

    In ``"inductive"`` mode ``s = w_attr * s_aa + w_cross * s_cross``, the
    cross term being dropped for pairs without structure embeddings. In
    ``"full"`` mode both nodes must be in the structure table and
    ``w_struct * s_ss`` is added.
    """
    if mode not in ("inductive", "full"):
        raise ValueError(f"mode must be 'inductive' or 'full', got {mode!r}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if H is None:
        H = encode_attr(m, X)
    i, j = pairs[:, 0], pairs[:, 1]
    need_struct = mode == "full" or m.config.w_cross > 0
    ri = rj = None
    has = np.zeros(len(pairs), dtype=bool)
    if need_struct:
        ri, rj = m.struct_rows(i), m.struct_rows(j)
        has = (ri >= 0) & (rj >= 0)
        if mode == "full" and not has.all():
            k = int(np.flatnonzero(~has)[0])
            raise KeyError(f"node pair ({i[k]}, {j[k]}) is outside the structure table; use mode='inductive'")
    S = m.params["struct.S"]
    hs_i = S[np.maximum(ri, 0)] if need_struct and S.shape[0] else None
    hs_j = S[np.maximum(rj, 0)] if need_struct and S.shape[0] else None
    comps = score_components(m, H[i], H[j], hs_i, hs_j)
    return nk.sigmoid(m.a * _combine(m, comps, mode, has) + m.c)


def link_probability(m: DealModel, X, i: int, j: int, mode: str = "inductive") -> float:
    return float(pair_probabilities(m, X, [(i, j)], mode)[0])


def _pair_cos_backward(U: np.ndarray, pairs: np.ndarray, ds: np.ndarray) -> np.ndarray:
    dU = np.zeros_like(U)
    np.add.at(dU, pairs[:, 0], ds[:, None] * U[pairs[:, 1]])
    np.add.at(dU, pairs[:, 1], ds[:, None] * U[pairs[:, 0]])
    return dU


def _ranking(s_pos, s_neg, theta):
    diff = s_pos - s_neg
    loss = float(np.mean(nk.softplus(-theta * diff)))
    w = -theta * nk.sigmoid(-theta * diff) / diff.size
    return loss, w, -w


def deal_loss(m: DealModel, train_graph: Graph, X, pos_pairs, neg_pairs) -> tuple[float, dict]:
    """Full training objective on training-graph ids; gradients go into ``m.params``.

    ``X`` rows are aligned with ``train_graph`` nodes. Returns the loss and
    its individual terms.
    """
    cfg = m.config
    X = as_array(X)
    pos = np.asarray(pos_pairs, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg_pairs, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("deal_loss needs at least one positive pair")
    if len(pos) != len(neg):
        raise ValueError(f"positive/negative pairs must pair up 1:1, got {len(pos)} vs {len(neg)}")
    if X.shape[0] != train_graph.num_nodes or m.params["struct.S"].shape[0] != train_graph.num_nodes:
        raise nk.ShapeError("deal_loss: features/structure rows must match the training graph")

    Ha, cache = _attr_forward(m, X)
    S = m.params["struct.S"]
    Ua, Us = nk.row_l2_normalize(Ha), nk.row_l2_normalize(S)
    both = np.concatenate([pos, neg])
    k = len(pos)

    saa = np.sum(Ua[both[:, 0]] * Ua[both[:, 1]], axis=1)
    sss = np.sum(Us[both[:, 0]] * Us[both[:, 1]], axis=1)
    r_aa, gp, gn = _ranking(saa[:k], saa[k:], cfg.theta_r)
    ds_aa = cfg.lambda_aa * np.concatenate([gp, gn])
    r_ss, gp, gn = _ranking(sss[:k], sss[k:], cfg.theta_r)
    ds_ss = cfg.lambda_ss * np.concatenate([gp, gn])

    n = X.shape[0]
    align_cos = np.sum(Ua * Us, axis=1)
    align = float(np.mean(1.0 - align_cos))

    a, c = m.a, m.c
    z = a * saa + c
    labels = np.concatenate([np.ones(k), np.zeros(k)])
    bce = float(np.mean(np.where(labels == 1, nk.softplus(-z), nk.softplus(z))))
    dz = cfg.lambda_bce * (nk.sigmoid(z) - labels) / z.size
    ds_aa = ds_aa + a * dz
    m.params.accumulate("calib.a", np.array([[np.sum(dz * saa)]]))
    m.params.accumulate("calib.c", np.array([[np.sum(dz)]]))

    dUa = _pair_cos_backward(Ua, both, ds_aa) - cfg.lambda_align * Us / n
    dUs = _pair_cos_backward(Us, both, ds_ss) - cfg.lambda_align * Ua / n
    _attr_backward(m, cache, nk.row_l2_normalize_backward(Ha, dUa))
    m.params.accumulate("struct.S", nk.row_l2_normalize_backward(S, dUs))

    loss = cfg.lambda_aa * r_aa + cfg.lambda_ss * r_ss + cfg.lambda_align * align + cfg.lambda_bce * bce
    return float(loss), {"rank_aa": r_aa, "rank_ss": r_ss, "align": align, "bce": bce}


def train_deal(g_train: Graph, X, cfg: DealConfig, node_ids=None, val=None):
    """Full-batch training; returns ``(model, history)``.

    ``node_ids`` maps training-graph node ``r`` to row ``node_ids[r]`` of
    ``X`` (default: identity). ``val`` is an optional ``(pos, neg)`` pair of
    arrays in ``X`` ids; when given, the parameters with the best
    validation ROC-AUC are returned.
    """
    Xa = as_array(X)
    node_ids = np.arange(g_train.num_nodes) if node_ids is None else np.asarray(node_ids, np.int64)
    if node_ids.size != g_train.num_nodes:
        raise ValueError("node_ids must have one entry per training-graph node")
    X_train = Xa[node_ids]
    m = init_deal(cfg, Xa.shape[1], node_ids)
    state = nk.AdamState(lr=cfg.lr)
    pos = g_train.pairs()
    if len(pos) == 0:
        raise ValueError("training graph has no edges")

    if val is not None:
        val_pos = np.asarray(val[0], np.int64).reshape(-1, 2)
        val_neg = np.asarray(val[1], np.int64).reshape(-1, 2)
        val_pairs = np.concatenate([val_pos, val_neg])
        val_labels = np.concatenate([np.ones(len(val_pos)), np.zeros(len(val_neg))])
        if not (len(val_pos) and len(val_neg)):
            val = None

    history = []
    best_auc, best_snap = -np.inf, None
    for epoch in range(cfg.epochs):
        neg = sample_negatives(NegativeSampler(cfg.seed + epoch), g_train, len(pos))
        m.params.zero_grad()
        loss, terms = deal_loss(m, g_train, X_train, pos, neg)
        if not np.isfinite(loss):
            raise FloatingPointError(f"DEAL loss became non-finite at epoch {epoch}")
        nk.adam_step(m.params, state)
        row = {"epoch": epoch, "loss": loss, "val_auc": float("nan")}
        last = epoch == cfg.epochs - 1
        if val is not None and (epoch % cfg.eval_every == 0 or last):
            probs = pair_probabilities(m, Xa, val_pairs)
            row["val_auc"] = roc_auc(probs, val_labels)
            if row["val_auc"] > best_auc:
                best_auc, best_snap = row["val_auc"], m.params.snapshot()
        history.append(row)
        log.debug("deal epoch %d loss %.5f val_auc %.4f", epoch, loss, row["val_auc"])
    if best_snap is not None:
        m.params.restore(best_snap)
    if cfg.calibrate:
        # refit the calibration scalars on training pairs with the encoder frozen
        neg = sample_negatives(NegativeSampler(cfg.seed + cfg.epochs), g_train, len(pos))
        cal_pairs = node_ids[np.concatenate([pos, neg])]
        cal_labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        cal_X = Xa
        H = encode_attr(m, cal_X)
        s = score_components(m, H[cal_pairs[:, 0]], H[cal_pairs[:, 1]])["s_aa"]
        a, c = fit_calibration(s, cal_labels, m.a, m.c)
        m.params["calib.a"][0, 0] = a
        m.params["calib.c"][0, 0] = c
    return m, history


def fit_calibration(scores, labels, a0: float = 4.0, c0: float = 0.0, iters: int = 100) -> tuple[float, float]:
    """Minimize mean BCE of ``sigmoid(a * s + c)`` over ``(a, c)`` by damped Newton steps."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    theta = np.array([a0, c0], dtype=np.float64)
    feats = np.stack([s, np.ones_like(s)], axis=1)

    def objective(t):
        z = feats @ t
        return np.mean(np.where(y == 1, nk.softplus(-z), nk.softplus(z)))

    f = objective(theta)
    for _ in range(iters):
        p = nk.sigmoid(feats @ theta)
        grad = feats.T @ (p - y) / s.size
        hess = (feats * (p * (1 - p))[:, None]).T @ feats / s.size + 1e-9 * np.eye(2)
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while t > 1e-6:
            cand = theta - t * step
            fc = objective(cand)
            if fc <= f:
                break
            t *= 0.5
        else:
            break
        converged = f - fc < 1e-14
        theta, f = cand, fc
        if converged:
            break
    return float(theta[0]), float(theta[1])


def evaluate_deal(m: DealModel, X, pos, neg, split=None, which: str = "test") -> dict:
    """Inductive metrics on fixed pairs; with an inductive ``split`` also per pair kind."""
    pos = np.asarray(pos, np.int64).reshape(-1, 2)
    neg = np.asarray(neg, np.int64).reshape(-1, 2)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("empty evaluation set")
    H = encode_attr(m, X)
    pp, pn = pair_probabilities(m, X, pos, H=H), pair_probabilities(m, X, neg, H=H)
    out = binary_metrics(pp, pn)
    out["num_pos"], out["num_neg"] = len(pos), len(neg)
    if split is not None and getattr(split, "kind", "") == "inductive":
        kp, kn = split.pair_kinds(pos, which), split.pair_kinds(neg, which)
        for kind in ("new-new", "new-old"):
            sp, sn = pp[kp == kind], pn[kn == kind]
            if len(sp) and len(sn):
                sub = binary_metrics(sp, sn)
                sub["num_pos"], sub["num_neg"] = len(sp), len(sn)
                out[kind] = sub
    return out


def save_deal(m: DealModel, path) -> None:
    """Write ``path`` (checkpoint) and ``path`` with ``.json`` suffix (config sidecar)."""
    path = Path(path)
    nk.save_checkpoint(m.params, path)
    meta = {"model": "deal", "config": asdict(m.config), "in_dim": m.in_dim,
            "node_ids": m.node_ids.tolist()}
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def load_deal(path) -> DealModel:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("model") != "deal":
        raise ValueError(f"{path}: sidecar does not describe a DEAL model")
    return DealModel(DealConfig(**meta["config"]), nk.load_checkpoint(path), meta["node_ids"], meta["in_dim"])
