"""Undirected item graphs stored as symmetric edge records with a CSR index.

A :class:`Graph` is an immutable value: every mutation (``add_edges``,
``induced_subgraph``) returns a new graph. Records are kept in both
directions, so an undirected edge ``{u, v}`` contributes two records and
``degree(v)`` is the number of records whose source is ``v``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "FeatureMatrix",
    "GraphStats",
    "GraphError",
    "load_graph",
    "save_graph",
    "load_features",
    "save_features",
    "stats",
    "stats_from_counts",
    "add_edges",
    "induced_subgraph",
]


class GraphError(ValueError):
    """Raised for malformed graph or feature input."""


def _as_pair_array(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphError(f"expected an (m, 2) array of node pairs, got shape {arr.shape}")
    return arr


class Graph:
    """Immutable undirected graph over node ids ``0 .. num_nodes - 1``.

    Parameters
    ----------
    num_nodes : int
        Number of nodes, including isolated ones.
    pairs : array-like of shape (m, 2)
        Edge records. Either direction may be given; the graph is
        symmetrized and deduplicated.
    """

    __slots__ = ("_n", "_src", "_dst", "_indptr", "_keys")

    def __init__(self, num_nodes: int, pairs=()):
        n = int(num_nodes)
        if n < 0:
            raise GraphError(f"num_nodes must be non-negative, got {num_nodes}")
        arr = _as_pair_array(pairs)
        bad = np.flatnonzero((arr < 0).any(axis=1) | (arr >= n).any(axis=1))
        if bad.size:
            u, v = arr[bad[0]]
            raise GraphError(f"pair ({u}, {v}) at index {bad[0]} has a node id outside [0, {n})")
        loops = np.flatnonzero(arr[:, 0] == arr[:, 1])
        if loops.size:
            raise GraphError(f"self-loop ({arr[loops[0], 0]}, {arr[loops[0], 0]}) at index {loops[0]}")

        both = np.concatenate([arr, arr[:, ::-1]]) if arr.size else arr
        keys = np.unique(both[:, 0] * n + both[:, 1]) if both.size else np.empty(0, np.int64)
        src = keys // n if n else keys
        dst = keys % n if n else keys
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        for a in (src, dst, indptr, keys):
            a.flags.writeable = False
        self._n = n
        self._src = src
        self._dst = dst
        self._indptr = indptr
        self._keys = keys

    @property
    def num_nodes(self) -> int:
        return self._n

    @property
    def num_edge_records(self) -> int:
        return int(self._src.size)

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (half the record count)."""
        return int(self._src.size // 2)

    @property
    def src(self) -> np.ndarray:
        return self._src

    @property
    def dst(self) -> np.ndarray:
        return self._dst

    @property
    def indptr(self) -> np.ndarray:
        """CSR row offsets; neighbours of ``v`` are ``dst[indptr[v]:indptr[v+1]]``."""
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._dst

    @property
    def edge_records(self) -> np.ndarray:
        return np.stack([self._src, self._dst], axis=1)

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self._dst[self._indptr[v]:self._indptr[v + 1]]

    def pairs(self) -> np.ndarray:
        """Undirected edges as ``(u, v)`` rows with ``u < v``, sorted."""
        mask = self._src < self._dst
        return np.stack([self._src[mask], self._dst[mask]], axis=1)

    def record_keys(self) -> np.ndarray:
        """Sorted ``src * num_nodes + dst`` codes, one per record."""
        return self._keys

    def has_edges(self, u, v) -> np.ndarray:
        """Vectorized membership test for node pairs."""
        keys = np.asarray(u, dtype=np.int64) * self._n + np.asarray(v, dtype=np.int64)
        if self._keys.size == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, self._keys.size - 1)
        return self._keys[pos] == keys

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.has_edges(u, v))

    def adjacency(self, dtype=np.float64):
        """Adjacency as a ``scipy.sparse.csr_matrix``."""
        from scipy.sparse import csr_matrix

        data = np.ones(self._dst.size, dtype=dtype)
        return csr_matrix((data, self._dst, self._indptr), shape=(self._n, self._n))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._keys, other._keys)

    def __hash__(self):
        return hash((self._n, self._keys.tobytes()))

    def __repr__(self):
        return f"Graph(num_nodes={self._n}, num_edges={self.num_edges})"


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense per-node attribute vectors; row ``i`` belongs to node ``i``."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 2:
            raise GraphError(f"feature matrix must be 2-D, got shape {vals.shape}")
        bad = ~np.isfinite(vals)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise GraphError(f"non-finite feature value at row {r}, column {c}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def concat(self, other: "FeatureMatrix") -> "FeatureMatrix":
        """Column-wise concatenation, e.g. text and image embeddings."""
        if other.num_nodes != self.num_nodes:
            raise GraphError(f"row count mismatch: {self.num_nodes} vs {other.num_nodes}")
        return FeatureMatrix(np.hstack([self.values, other.values]))


def as_array(X) -> np.ndarray:
    return X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)


@dataclass(frozen=True)
class GraphStats:
    num_nodes: int
    num_edge_records: int
    num_zero_degree_nodes: int
    pct_zero_degree: float
    sparsity: float

    def as_dict(self, decimals: int | None = 2) -> dict:
        d = {
            "num_nodes": self.num_nodes,
            "num_edge_records": self.num_edge_records,
            "num_zero_degree_nodes": self.num_zero_degree_nodes,
            "pct_zero_degree": self.pct_zero_degree,
            "sparsity": self.sparsity,
        }
        if decimals is not None:
            d["pct_zero_degree"] = truncate(d["pct_zero_degree"], decimals)
            d["sparsity"] = truncate(d["sparsity"], decimals)
        return d

    def rows(self) -> list[tuple[str, str]]:
        """Printable rows; percentages are truncated to two decimals, not rounded."""
        return [
            ("Number of nodes", f"{self.num_nodes}"),
            ("Number of zero-degree nodes", f"{self.num_zero_degree_nodes}"),
            ("Percentage of zero degree nodes", f"{truncate(self.pct_zero_degree, 2):.2f}%"),
            ("Number of edges", f"{self.num_edge_records}"),
            ("Sparsity", f"{truncate(self.sparsity, 2):.2f}%"),
        ]


def truncate(x: float, decimals: int) -> float:
    """Cut ``x >= 0`` down to ``decimals`` places (99.8784 -> 99.87)."""
    scale = 10 ** decimals
    # the small slack keeps values like 0.29 * 100 = 28.999999999999996 from dropping a digit
    return math.floor(x * scale + 1e-9) / scale


def stats_from_counts(num_nodes: int, num_edge_records: int, num_zero_degree_nodes: int) -> GraphStats:
    """Table-style statistics from raw counts.

    Sparsity is ``100 * (1 - records / n**2)`` with records counted in both
    directions; percentages are kept unrounded.
    """
    n = int(num_nodes)
    if n == 0:
        return GraphStats(0, int(num_edge_records), 0, 0.0, 100.0)
    return GraphStats(
        num_nodes=n,
        num_edge_records=int(num_edge_records),
        num_zero_degree_nodes=int(num_zero_degree_nodes),
        pct_zero_degree=100.0 * num_zero_degree_nodes / n,
        sparsity=100.0 * (1.0 - num_edge_records / (n * n)),
    )


def stats(g: Graph) -> GraphStats:
    zero = int(np.count_nonzero(g.degrees() == 0))
    return stats_from_counts(g.num_nodes, g.num_edge_records, zero)


def add_edges(g: Graph, pairs) -> Graph:
    """Return a new graph with ``pairs`` added; ``g`` itself is untouched."""
    arr = _as_pair_array(pairs)
    n = g.num_nodes
    bad = (arr < 0).any(axis=1) | (arr >= n).any(axis=1) | (arr[:, 0] == arr[:, 1])
    if bad.any():
        offending = [tuple(int(x) for x in p) for p in arr[bad][:10]]
        raise GraphError(f"invalid pairs for a graph on {n} nodes (bad id or self-loop): {offending}")
    return Graph(n, np.concatenate([g.edge_records, arr]))


def induced_subgraph(g: Graph, keep) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``keep`` relabelled to ``0 .. len(keep) - 1``.

    Returns the subgraph and ``old_to_new``, an array of length
    ``g.num_nodes`` holding the new id or ``-1`` for dropped nodes.
    """
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    if keep.size == 0:
        raise GraphError("induced_subgraph needs at least one node to keep")
    if keep[0] < 0 or keep[-1] >= g.num_nodes:
        raise GraphError(f"keep set has ids outside [0, {g.num_nodes})")
    old_to_new = np.full(g.num_nodes, -1, dtype=np.int64)
    old_to_new[keep] = np.arange(keep.size)
    s, d = old_to_new[g.src], old_to_new[g.dst]
    mask = (s >= 0) & (d >= 0)
    return Graph(keep.size, np.stack([s[mask], d[mask]], axis=1)), old_to_new


_SPLIT = re.compile(r"[,\s]+")


def _parse_pairs(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p for p in _SPLIT.split(text) if p]
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected two node ids, got {text!r}")
            try:
                rows.append((int(parts[0]), int(parts[1]), lineno))
            except ValueError:
                raise GraphError(f"{path}:{lineno}: unparsable row {text!r}") from None
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def load_graph(edge_path, num_nodes: int) -> Graph:
    """Read a two-column edge list (comma or whitespace separated).

    Lines starting with ``#`` are comments. Rows lacking their reverse are
    symmetrized; duplicates are dropped.
    """
    rows = _parse_pairs(edge_path)
    for u, v, lineno in rows:
        if u < 0 or v < 0 or u >= num_nodes or v >= num_nodes:
            raise GraphError(f"{edge_path}:{lineno}: node id in ({u}, {v}) outside [0, {num_nodes})")
        if u == v:
            raise GraphError(f"{edge_path}:{lineno}: self-loop ({u}, {v}) is not allowed")
    return Graph(num_nodes, rows[:, :2])


def save_graph(g: Graph, path, *, header: str | None = None) -> None:
    """Write the canonical edge list: every record, sorted by (src, dst)."""
    write_pairs(path, g.edge_records, header=header)


def write_pairs(path, pairs, *, header: str | None = None) -> None:
    arr = _as_pair_array(pairs)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.writelines(f"{u},{v}\n" for u, v in arr.tolist())


def read_pairs(path) -> np.ndarray:
    """Read a pair list verbatim (no symmetrization), e.g. negatives."""
    return _parse_pairs(path)[:, :2].copy()


def load_features(path, num_nodes: int, dim: int, *, binary: bool = False) -> FeatureMatrix:
    """Read node features from CSV text or raw little-endian float32 binary."""
    expected = num_nodes * dim
    if binary:
        raw = np.fromfile(path, dtype="<f4")
        if raw.size != expected:
            raise GraphError(
                f"{path}: expected {expected} float32 values ({num_nodes}x{dim}), found {raw.size}"
            )
        vals = raw.astype(np.float64).reshape(num_nodes, dim)
    else:
        try:
            vals = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2, comments="#")
        except ValueError as exc:
            raise GraphError(f"{path}: {exc}") from None
        if vals.shape != (num_nodes, dim):
            raise GraphError(
                f"{path}: expected {num_nodes}x{dim} values, found {vals.shape[0]}x{vals.shape[1]}"
            )
    try:
        return FeatureMatrix(vals)
    except GraphError as exc:
        raise GraphError(f"{path}: {exc}") from None


def save_features(X: FeatureMatrix, path, *, binary: bool = False) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if binary:
        X.values.astype("<f4").tofile(path)
    else:
        np.savetxt(path, X.values, delimiter=",", fmt="%.17g")
