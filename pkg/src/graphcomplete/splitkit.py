"""Train/validation/test protocols for link prediction.

Inductive splits hold out *nodes*: the training graph is the subgraph
induced on the remaining nodes, and evaluation edges touch at least one
held-out node. Transductive splits hold out *edges* and keep every node in
the training graph. In both cases evaluation negatives are drawn once and
stored with the split; training negatives are drawn fresh every epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphstore import Graph, GraphError, induced_subgraph, read_pairs, write_pairs

__all__ = [
    "NegativeSampler",
    "sample_negatives",
    "InductiveSplit",
    "TransductiveSplit",
    "split_inductive",
    "split_transductive",
    "save_split",
    "load_split",
]

_MAX_ROUNDS = 200


@dataclass
class NegativeSampler:
    """Seeded rejection sampler for undirected non-edges.

    Every pair it returns is added to ``exclude``, so successive calls on
    the same sampler never repeat a pair.
    """

    seed: int
    exclude: set = field(default_factory=set)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def exclude_pairs(self, pairs, n: int) -> None:
        arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        lo, hi = arr.min(axis=1), arr.max(axis=1)
        self.exclude.update((lo * n + hi).tolist())


def _canon(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.minimum(u, v), np.maximum(u, v)


def sample_negatives(sampler: NegativeSampler, g: Graph, count: int, *,
                     anchors=None, partners=None) -> np.ndarray:
    """Draw ``count`` distinct non-edges of ``g`` uniformly at random.

    Pairs are returned as ``(u, v)`` with ``u < v``. ``anchors`` restricts
    the population to pairs with at least one endpoint in that node set and
    ``partners`` restricts the other endpoint; with neither given the
    population is every non-edge.
    """
    n = g.num_nodes
    count = int(count)
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    rng = sampler._rng

    restricted = anchors is not None or partners is not None
    anchors = np.arange(n) if anchors is None else np.unique(np.asarray(anchors, np.int64))
    partners = np.arange(n) if partners is None else np.unique(np.asarray(partners, np.int64))
    in_anchor = np.zeros(n, dtype=bool)
    in_anchor[anchors] = True
    in_partner = np.zeros(n, dtype=bool)
    in_partner[partners] = True

    c = int(np.count_nonzero(in_anchor & in_partner))
    population = anchors.size * partners.size - c - c * (c - 1) // 2
    lower = population - g.num_edges - len(sampler.exclude)
    if lower < 2 * count:
        keys = _population(g, anchors, in_anchor, in_partner, sampler.exclude)
        if count > keys.size:
            raise GraphError(
                f"cannot sample {count} negative pairs: only {keys.size} eligible non-edges remain"
            )
        picked = keys[rng.permutation(keys.size)[:count]]
        sampler.exclude.update(picked.tolist())
        return np.stack([picked // n, picked % n], axis=1)

    out: list[int] = []
    chosen: set[int] = set()
    for _ in range(_MAX_ROUNDS):
        need = count - len(out)
        batch = max(64, 2 * need)
        u = anchors[rng.integers(0, anchors.size, batch)]
        v = partners[rng.integers(0, partners.size, batch)]
        # pairs with both ends eligible as anchor and partner are reachable two ways
        twice = in_anchor[v] & in_partner[u]
        keep = (u != v) & (~twice | (rng.random(batch) < 0.5)) if restricted else u != v
        u, v = _canon(u[keep], v[keep])
        ok = ~g.has_edges(u, v)
        for key in (u[ok] * n + v[ok]).tolist():
            if key in chosen or key in sampler.exclude:
                continue
            chosen.add(key)
            out.append(key)
            if len(out) == count:
                break
        if len(out) == count:
            break
    else:
        raise GraphError(
            f"negative sampling gave up after {_MAX_ROUNDS} rounds with {len(out)}/{count} pairs"
        )
    sampler.exclude.update(out)
    keys = np.array(out, dtype=np.int64)
    return np.stack([keys // n, keys % n], axis=1)


def _population(g: Graph, anchors, in_anchor, in_partner, exclude) -> np.ndarray:
    """Sorted keys of every eligible non-edge; only used for small or dense cases."""
    n = g.num_nodes
    u = np.repeat(anchors, n)
    v = np.tile(np.arange(n), anchors.size)
    mask = in_partner[v] & (u != v)
    u, v = _canon(u[mask], v[mask])
    keys = np.unique(u * n + v)
    keys = keys[~g.has_edges(keys // n, keys % n)]
    if exclude:
        keys = keys[~np.isin(keys, np.fromiter(exclude, np.int64, len(exclude)))]
    return keys


def _check_fracs(val_frac: float, test_frac: float) -> None:
    if val_frac < 0 or test_frac < 0 or not 0 < val_frac + test_frac < 1:
        raise ValueError(f"need 0 < val_frac + test_frac < 1, got {val_frac} + {test_frac}")


@dataclass
class InductiveSplit:
    train_nodes: np.ndarray
    val_nodes: np.ndarray
    test_nodes: np.ndarray
    train_graph: Graph
    old_to_new: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int
    val_frac: float
    test_frac: float

    kind = "inductive"

    def pair_kinds(self, pairs, which: str = "test") -> np.ndarray:
        """Label each pair ``"new-new"`` or ``"new-old"`` w.r.t. held-out nodes."""
        held = self.test_nodes if which == "test" else self.val_nodes
        mask = np.zeros(self.old_to_new.size, dtype=bool)
        mask[held] = True
        p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        both = mask[p[:, 0]] & mask[p[:, 1]]
        return np.where(both, "new-new", "new-old")


@dataclass
class TransductiveSplit:
    train_graph: Graph
    train_pos: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int
    val_frac: float
    test_frac: float

    kind = "transductive"


def split_inductive(g: Graph, val_frac: float = 0.1, test_frac: float = 0.1,
                    seed: int = 0) -> InductiveSplit:
    """Hold out ``floor(frac * n)`` nodes each for validation and test.

    An edge touching both a validation and a test node is a test edge.
    Negatives follow the positive population: a validation negative has an
    endpoint among the validation nodes and none among the test nodes, a
    test negative has an endpoint among the test nodes.
    """
    _check_fracs(val_frac, test_frac)
    n = g.num_nodes
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val, n_test = int(np.floor(val_frac * n)), int(np.floor(test_frac * n))
    val_nodes = np.sort(perm[:n_val])
    test_nodes = np.sort(perm[n_val:n_val + n_test])
    train_nodes = np.sort(perm[n_val + n_test:])
    if train_nodes.size == 0:
        raise GraphError("inductive split leaves no training nodes")

    train_graph, old_to_new = induced_subgraph(g, train_nodes)
    if train_graph.num_edges == 0:
        raise GraphError("inductive split leaves zero training edges")

    is_val = np.zeros(n, dtype=bool)
    is_val[val_nodes] = True
    is_test = np.zeros(n, dtype=bool)
    is_test[test_nodes] = True
    pairs = g.pairs()
    touches_test = is_test[pairs[:, 0]] | is_test[pairs[:, 1]]
    touches_val = is_val[pairs[:, 0]] | is_val[pairs[:, 1]]
    test_pos = pairs[touches_test]
    val_pos = pairs[touches_val & ~touches_test]

    sampler = NegativeSampler(seed + 1)
    not_test = np.flatnonzero(~is_test)
    val_neg = sample_negatives(sampler, g, len(val_pos), anchors=val_nodes, partners=not_test) \
        if len(val_pos) else np.empty((0, 2), np.int64)
    test_neg = sample_negatives(sampler, g, len(test_pos), anchors=test_nodes) \
        if len(test_pos) else np.empty((0, 2), np.int64)
    return InductiveSplit(train_nodes, val_nodes, test_nodes, train_graph, old_to_new,
                          val_pos, val_neg, test_pos, test_neg, int(seed), val_frac, test_frac)


def split_transductive(g: Graph, val_frac: float = 0.05, test_frac: float = 0.10,
                       seed: int = 0) -> TransductiveSplit:
    """Shuffle the undirected edges and cut them into train/val/test."""
    _check_fracs(val_frac, test_frac)
    pairs = g.pairs()
    m = len(pairs)
    if m < 10:
        raise GraphError(f"transductive split needs at least 10 edges, graph has {m}")
    rng = np.random.default_rng(seed)
    pairs = pairs[rng.permutation(m)]
    n_val, n_test = int(np.floor(val_frac * m)), int(np.floor(test_frac * m))
    val_pos = pairs[:n_val]
    test_pos = pairs[n_val:n_val + n_test]
    train_pos = pairs[n_val + n_test:]
    train_graph = Graph(g.num_nodes, train_pos)

    sampler = NegativeSampler(seed + 1)
    val_neg = sample_negatives(sampler, g, n_val)
    test_neg = sample_negatives(sampler, g, n_test)
    return TransductiveSplit(train_graph, train_pos, val_pos, val_neg, test_pos, test_neg,
                             int(seed), val_frac, test_frac)


def save_split(split, out_dir) -> None:
    """Write a split to ``out_dir`` as edge CSVs plus ``split.json``.

    ``train_edges.csv`` holds original node ids in both cases.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"kind": split.kind, "seed": split.seed, "val_frac": split.val_frac,
            "test_frac": split.test_frac}
    if isinstance(split, InductiveSplit):
        tg = split.train_graph.pairs()
        train_edges = split.train_nodes[tg] if len(tg) else tg
        meta["num_nodes"] = int(split.old_to_new.size)
        meta["train_nodes"] = split.train_nodes.tolist()
        meta["val_nodes"] = split.val_nodes.tolist()
        meta["test_nodes"] = split.test_nodes.tolist()
    else:
        train_edges = split.train_pos
        meta["num_nodes"] = split.train_graph.num_nodes
    write_pairs(out / "train_edges.csv", train_edges)
    for name in ("val_pos", "val_neg", "test_pos", "test_neg"):
        write_pairs(out / f"{name}.csv", getattr(split, name))
    (out / "split.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_split(in_dir):
    d = Path(in_dir)
    meta = json.loads((d / "split.json").read_text())
    n = int(meta["num_nodes"])
    lists = {name: read_pairs(d / f"{name}.csv") for name in ("val_pos", "val_neg", "test_pos", "test_neg")}
    train_edges = read_pairs(d / "train_edges.csv")
    common = dict(seed=meta["seed"], val_frac=meta["val_frac"], test_frac=meta["test_frac"])
    if meta["kind"] == "inductive":
        train_nodes = np.array(meta["train_nodes"], dtype=np.int64)
        old_to_new = np.full(n, -1, dtype=np.int64)
        old_to_new[train_nodes] = np.arange(train_nodes.size)
        tg = Graph(train_nodes.size, old_to_new[train_edges] if len(train_edges) else train_edges)
        return InductiveSplit(train_nodes, np.array(meta["val_nodes"], np.int64),
                              np.array(meta["test_nodes"], np.int64), tg, old_to_new, **lists, **common)
    return TransductiveSplit(Graph(n, train_edges), train_edges, **lists, **common)
