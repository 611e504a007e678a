"""One-pass graph enrichment with a trained inductive model.

Every node whose degree is at most ``d_max`` is a source. Each source is
scored against every other node and pairs with link probability at least
``p_min`` are added as new edges. Existing edges are never removed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import nnkit as nk
from .deal import DealModel, encode_attr
from .graphstore import Graph, GraphStats, add_edges, as_array, stats

__all__ = ["EnrichConfig", "EnrichReport", "PRESETS", "enrich_graph", "enrich_report_format", "score_sources"]

# (d_max, p_min) used for the three reference datasets
PRESETS = {
    "men": (5, 0.85),
    "women": (2, 0.99),
    "computers": (20, 0.60),
}


@dataclass
class EnrichConfig:
    d_max: int = 5
    p_min: float = 0.85
    c_max: int | None = None
    candidate_block: int = 256

    def __post_init__(self):
        if not 0.0 <= self.p_min <= 1.0:
            raise ValueError(f"p_min must lie in [0, 1], got {self.p_min}")
        if self.d_max < 0:
            raise ValueError(f"d_max must be non-negative, got {self.d_max}")
        if self.c_max is not None and self.c_max < 0:
            raise ValueError(f"c_max must be non-negative, got {self.c_max}")
        if self.candidate_block < 1:
            raise ValueError("candidate_block must be at least 1")

    @classmethod
    def preset(cls, name: str, **overrides) -> "EnrichConfig":
        d_max, p_min = PRESETS[name.lower()]
        return cls(d_max=d_max, p_min=p_min, **overrides)


@dataclass
class EnrichReport:
    sources_considered: int
    pairs_scored: int
    edges_added: int
    stats_before: GraphStats
    stats_after: GraphStats
    d_max: int
    p_min: float
    c_max: int | None
    added_pairs: np.ndarray

    def as_dict(self) -> dict:
        return {
            "sources_considered": self.sources_considered,
            "pairs_scored": self.pairs_scored,
            "edges_added": self.edges_added,
            "thresholds": {"d_max": self.d_max, "p_min": self.p_min, "c_max": self.c_max},
            "before": self.stats_before.as_dict(),
            "after": self.stats_after.as_dict(),
        }


def _scores_fn(m: DealModel, X: np.ndarray):
    """Closure returning ``(block_sources, all_nodes)`` probability matrices."""
    cfg = m.config
    U = nk.row_l2_normalize(encode_attr(m, X))
    use_cross = cfg.w_cross > 0
    if use_cross:
        rows = m.struct_rows(np.arange(X.shape[0]))
        has = rows >= 0
        S = m.params["struct.S"]
        V = np.zeros_like(U)
        if S.shape[0]:
            V[has] = nk.row_l2_normalize(S)[rows[has]]
    a, c = m.a, m.c

    def block(src: np.ndarray) -> np.ndarray:
        s = cfg.w_attr * (U[src] @ U.T)
        if use_cross:
            cross = 0.5 * (U[src] @ V.T + V[src] @ U.T)
            s = s + cfg.w_cross * np.where(has[src][:, None] & has[None, :], cross, 0.0)
        return nk.sigmoid(a * s + c)

    return block


def score_sources(m: DealModel, X, sources, block: int = 256):
    """Yield ``(source_ids, probability_rows)`` blocks in ascending source order."""
    fn = _scores_fn(m, as_array(X))
    sources = np.sort(np.asarray(sources, dtype=np.int64))
    for start in range(0, sources.size, block):
        src = sources[start:start + block]
        yield src, fn(src)


def enrich_graph(g: Graph, m: DealModel, X, cfg: EnrichConfig) -> tuple[Graph, EnrichReport]:
    Xa = as_array(X)
    if Xa.shape[0] != g.num_nodes:
        raise nk.ShapeError(f"features cover {Xa.shape[0]} nodes, graph has {g.num_nodes}")
    if Xa.shape[1] != m.in_dim:
        raise nk.ShapeError(f"feature dim {Xa.shape[1]} does not match model input dim {m.in_dim}")
    n = g.num_nodes
    sources = np.flatnonzero(g.degrees() <= cfg.d_max)

    found = []
    for src, P in score_sources(m, Xa, sources, cfg.candidate_block):
        P = P.copy()
        P[np.arange(src.size), src] = -1.0
        # existing neighbours are not candidates
        r = np.repeat(np.arange(src.size), np.diff(g.indptr)[src])
        nb = np.concatenate([g.neighbors(v) for v in src]) if src.size else np.empty(0, np.int64)
        P[r, nb] = -1.0
        for k, v in enumerate(src):
            cand = np.flatnonzero(P[k] >= cfg.p_min)
            if cfg.c_max is not None and cand.size > cfg.c_max:
                # highest probability first, ties to the smaller id
                order = np.lexsort((cand, -P[k, cand]))
                cand = np.sort(cand[order[:cfg.c_max]])
            if cand.size:
                found.append(np.stack([np.full(cand.size, v), cand], axis=1))

    if found:
        pairs = np.concatenate(found)
        lo, hi = np.minimum(pairs[:, 0], pairs[:, 1]), np.maximum(pairs[:, 0], pairs[:, 1])
        keys = np.unique(lo * n + hi)
        added = np.stack([keys // n, keys % n], axis=1)
    else:
        added = np.empty((0, 2), dtype=np.int64)
    g2 = add_edges(g, added) if len(added) else g
    report = EnrichReport(
        sources_considered=int(sources.size),
        pairs_scored=int(sources.size * max(n - 1, 0)),
        edges_added=(g2.num_edge_records - g.num_edge_records) // 2,
        stats_before=stats(g),
        stats_after=stats(g2),
        d_max=cfg.d_max,
        p_min=cfg.p_min,
        c_max=cfg.c_max,
        added_pairs=added,
    )
    return g2, report


def enrich_report_format(r: EnrichReport) -> tuple[str, str]:
    """Human-readable before/after table and the matching JSON document."""
    before, after = r.stats_before.rows(), r.stats_after.rows()
    width = max(len(name) for name, _ in before)
    lines = [f"{'Graph property':<{width}}  {'original':>12}  {'enriched':>12}"]
    for (name, b), (_, a) in zip(before, after):
        lines.append(f"{name:<{width}}  {b:>12}  {a:>12}")
    lines.append("")
    lines.append(f"sources (degree <= {r.d_max}): {r.sources_considered}, pairs scored: {r.pairs_scored}, "
                 f"edges added: {r.edges_added} (p >= {r.p_min})")
    return "\n".join(lines), json.dumps(r.as_dict(), indent=1, sort_keys=True)
