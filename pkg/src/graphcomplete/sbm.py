"""Synthetic item-compatibility graphs from a stochastic block model.

Nodes are split into ``k`` contiguous, near-equal blocks. Features are the
one-hot block indicator (padded with zero columns up to ``feature_dim``)
plus Gaussian noise. A random ``sparse_frac`` of the nodes plays the role of
newly listed items: each edge touching one of them is hidden with
probability ``hide_frac`` and returned separately as ground truth. With
``hide_scope="intra"`` only intra-block edges are eligible for hiding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphstore import FeatureMatrix, Graph, GraphError

__all__ = ["SbmSpec", "SbmData", "sbm_generate"]


@dataclass
class SbmSpec:
    n: int = 400
    k: int = 8
    p_in: float = 0.15
    p_out: float = 0.01
    feature_dim: int | None = None
    feature_noise: float = 0.3
    hide_frac: float = 0.7
    sparse_frac: float = 0.3
    seed: int = 0
    hide_scope: str = "all"

    def __post_init__(self):
        if self.feature_dim is None:
            self.feature_dim = self.k
        if self.hide_scope not in ("all", "intra"):
            raise ValueError(f"hide_scope must be 'all' or 'intra', got {self.hide_scope!r}")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError(f"need 0 <= p_out < p_in <= 1, got p_out={self.p_out}, p_in={self.p_in}")
        for name in ("hide_frac", "sparse_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.n < 2 or self.k < 1 or self.k > self.n:
            raise ValueError("need n >= 2 and 1 <= k <= n")
        if self.feature_dim < self.k:
            raise ValueError(f"feature_dim ({self.feature_dim}) must be at least k ({self.k})")
        if self.feature_noise < 0:
            raise ValueError("feature_noise must be non-negative")


@dataclass
class SbmData:
    graph: Graph
    features: FeatureMatrix
    hidden: np.ndarray
    blocks: np.ndarray
    sparse_nodes: np.ndarray


def sbm_generate(spec: SbmSpec) -> SbmData:
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.k
    blocks = np.arange(n) * k // n

    iu, ju = np.triu_indices(n, 1)
    same = blocks[iu] == blocks[ju]
    prob = np.where(same, spec.p_in, spec.p_out)
    keep = rng.random(iu.size) < prob
    iu, ju, same = iu[keep], ju[keep], same[keep]

    n_sparse = int(np.floor(spec.sparse_frac * n))
    sparse_nodes = np.sort(rng.permutation(n)[:n_sparse])
    is_sparse = np.zeros(n, dtype=bool)
    is_sparse[sparse_nodes] = True
    eligible = is_sparse[iu] | is_sparse[ju]
    if spec.hide_scope == "intra":
        eligible &= same
    hide = eligible & (rng.random(iu.size) < spec.hide_frac)

    visible = np.stack([iu[~hide], ju[~hide]], axis=1)
    hidden = np.stack([iu[hide], ju[hide]], axis=1)
    if len(visible) == 0:
        raise GraphError("SBM parameters produced a graph without visible edges")

    feats = np.zeros((n, spec.feature_dim))
    feats[np.arange(n), blocks] = 1.0
    feats += spec.feature_noise * rng.standard_normal(feats.shape)
    return SbmData(Graph(n, visible), FeatureMatrix(feats), hidden, blocks, sparse_nodes)
