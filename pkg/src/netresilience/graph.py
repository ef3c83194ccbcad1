"""Weighted undirected graph storage, file ingestion, and threshold erosion.

Graphs are immutable after construction: every transforming operation
(erosion, metadata attachment) returns a new instance, so values are safe
to share across concurrent readers.  Node ids are dense integers in
``[0, node_count)``; external labels and 3-d positions ride along as
optional metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import EdgelessGraphError, GraphInputError

__all__ = [
    "ComponentLabeling",
    "UnionFind",
    "WeightHistogram",
    "WeightedGraph",
    "from_dense_matrix",
    "from_edge_list",
    "load_positions",
]

# Absolute tolerance for symmetry of dense-matrix input.
DENSE_SYMMETRY_TOL = 1e-12


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        """Merge the sets holding i and j; returns True if they were distinct."""
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return True


@dataclass(frozen=True)
class ComponentLabeling:
    """Connected-component labels, dense in ``[0, component_count)``.

    Labels are assigned in order of first appearance by node id, so the
    labeling is canonical for a given graph.
    """

    labels: tuple[int, ...]
    component_count: int
    component_sizes: tuple[int, ...]


@dataclass(frozen=True)
class WeightHistogram:
    """Equal-width histogram of edge weights over ``[0, max weight]``.

    All bins are half-open ``[a, b)`` except the last, which is closed on
    the right so the maximum weight is counted.
    """

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]


class WeightedGraph:
    """Undirected weighted graph with strictly positive edge weights.

    At most one edge per unordered pair and no self-loops; a weight of
    zero means "no edge".  Edges are stored as parallel arrays sorted by
    ``(u, v)`` with ``u < v`` and marked read-only.
    """

    __slots__ = ("node_count", "_u", "_v", "_w", "_strength", "_degree",
                 "node_positions", "node_labels")

    def __init__(self, node_count: int,
                 edges: Iterable[tuple[int, int, float]] = (),
                 positions: np.ndarray | None = None,
                 labels: tuple[str, ...] | None = None):
        edges = list(edges)
        u = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
        v = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
        w = np.fromiter((e[2] for e in edges), dtype=np.float64, count=len(edges))
        self._init_arrays(int(node_count), u, v, w, validate=True)
        self._init_metadata(positions, labels)

    # -- construction helpers -------------------------------------------------

    def _init_arrays(self, node_count: int, u: np.ndarray, v: np.ndarray,
                     w: np.ndarray, validate: bool) -> None:
        if node_count < 0:
            raise GraphInputError(f"node_count must be non-negative, got {node_count}")
        if validate and u.size:
            if u.min() < 0 or v.min() < 0 or u.max() >= node_count or v.max() >= node_count:
                raise GraphInputError("edge endpoint outside [0, node_count)")
            if (u == v).any():
                bad = int(u[(u == v).argmax()])
                raise GraphInputError(f"self-loop at node {bad}")
            if not (w > 0).all():
                raise GraphInputError("edge weights must be strictly positive")
            lo = np.minimum(u, v)
            hi = np.maximum(u, v)
            order = np.lexsort((hi, lo))
            u, v, w = lo[order], hi[order], w[order]
            dup = (u[1:] == u[:-1]) & (v[1:] == v[:-1])
            if dup.any():
                i = int(dup.argmax())
                raise GraphInputError(
                    f"duplicate edge for unordered pair ({int(u[i])}, {int(v[i])})")
        for arr in (u, v, w):
            arr.setflags(write=False)
        self.node_count = node_count
        self._u, self._v, self._w = u, v, w
        ends = np.concatenate([u, v])
        strength = np.bincount(ends, weights=np.concatenate([w, w]),
                               minlength=node_count).astype(np.float64)
        degree = np.bincount(ends, minlength=node_count).astype(np.float64)
        strength.setflags(write=False)
        degree.setflags(write=False)
        self._strength = strength
        self._degree = degree

    def _init_metadata(self, positions, labels) -> None:
        if positions is not None:
            positions = np.asarray(positions, dtype=np.float64)
            if positions.shape != (self.node_count, 3):
                raise GraphInputError(
                    f"positions must have shape ({self.node_count}, 3), "
                    f"got {positions.shape}")
            positions = positions.copy()
            positions.setflags(write=False)
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != self.node_count:
                raise GraphInputError("one label per node required")
        self.node_positions = positions
        self.node_labels = labels

    @classmethod
    def _from_sorted_arrays(cls, node_count: int, u: np.ndarray, v: np.ndarray,
                            w: np.ndarray, positions=None, labels=None) -> "WeightedGraph":
        """Trusted constructor for arrays already validated and sorted."""
        g = object.__new__(cls)
        g._init_arrays(node_count, u, v, w, validate=False)
        g._init_metadata(positions, labels)
        return g

    # -- basic accessors -------------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self._u.size)

    @property
    def total_weight(self) -> float:
        """Sum of all edge weights (the modularity normalizer m)."""
        return float(self._w.sum())

    @property
    def max_weight(self) -> float:
        return float(self._w.max()) if self._w.size else 0.0

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Read-only ``(u, v, w)`` arrays sorted by (u, v), u < v."""
        return self._u, self._v, self._w

    def iter_edges(self) -> Iterator[tuple[int, int, float]]:
        for u, v, w in zip(self._u, self._v, self._w):
            yield int(u), int(v), float(w)

    def strengths(self, weighted: bool = True) -> np.ndarray:
        """Per-node weighted strength, or binary degree when weighted=False.

        Returns a shared read-only array.
        """
        return self._strength if weighted else self._degree

    def strength(self, node: int, weighted: bool = True) -> float:
        if not 0 <= node < self.node_count:
            raise IndexError(f"node id {node} outside [0, {self.node_count})")
        return float(self.strengths(weighted)[node])

    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric adjacency matrix A with A[u, v] = w."""
        a = np.zeros((self.node_count, self.node_count))
        a[self._u, self._v] = self._w
        a[self._v, self._u] = self._w
        return a

    def adjacency_lists(self) -> list[dict[int, float]]:
        """Neighbor map per node; insertion order follows the edge arrays."""
        adj: list[dict[int, float]] = [{} for _ in range(self.node_count)]
        for u, v, w in zip(self._u, self._v, self._w):
            adj[u][int(v)] = float(w)
            adj[v][int(u)] = float(w)
        return adj

    # -- erosion ---------------------------------------------------------------

    def erode_above(self, t: float) -> "WeightedGraph":
        """Subgraph keeping exactly the edges with weight <= t.

        This is the paper-style erosion: raising t from 0 to the maximum
        weight admits edges from weakest to strongest.  The node set and
        metadata are preserved; the input graph is untouched.
        """
        if not t >= 0:
            raise ValueError(f"threshold must be >= 0, got {t}")
        keep = self._w <= t
        return WeightedGraph._from_sorted_arrays(
            self.node_count, self._u[keep], self._v[keep], self._w[keep],
            self.node_positions, self.node_labels)

    def erode_below(self, t: float) -> "WeightedGraph":
        """Subgraph keeping exactly the edges with weight >= t (opposite sweep)."""
        if not t >= 0:
            raise ValueError(f"threshold must be >= 0, got {t}")
        keep = self._w >= t
        return WeightedGraph._from_sorted_arrays(
            self.node_count, self._u[keep], self._v[keep], self._w[keep],
            self.node_positions, self.node_labels)

    # -- components and weights ------------------------------------------------

    def connected_components(self) -> ComponentLabeling:
        """Union-find component labeling; labels dense by first appearance."""
        uf = UnionFind(self.node_count)
        for u, v in zip(self._u, self._v):
            uf.union(int(u), int(v))
        labels = [0] * self.node_count
        remap: dict[int, int] = {}
        sizes: list[int] = []
        for node in range(self.node_count):
            root = uf.find(node)
            label = remap.get(root)
            if label is None:
                label = len(remap)
                remap[root] = label
                sizes.append(0)
            labels[node] = label
            sizes[label] += 1
        return ComponentLabeling(tuple(labels), len(remap), tuple(sizes))

    def weight_histogram(self, bins: int) -> WeightHistogram:
        """Histogram of edge weights in equal-width bins over [0, max weight]."""
        if bins < 1:
            raise ValueError(f"bins must be >= 1, got {bins}")
        if self.edge_count == 0:
            raise EdgelessGraphError("weight histogram undefined for an edgeless graph")
        counts, edges = np.histogram(self._w, bins=bins, range=(0.0, self.max_weight))
        return WeightHistogram(tuple(float(e) for e in edges),
                               tuple(int(c) for c in counts))

    # -- metadata --------------------------------------------------------------

    def with_positions(self, positions: np.ndarray) -> "WeightedGraph":
        return WeightedGraph._from_sorted_arrays(
            self.node_count, self._u, self._v, self._w, positions, self.node_labels)

    def with_labels(self, labels: Iterable[str]) -> "WeightedGraph":
        return WeightedGraph._from_sorted_arrays(
            self.node_count, self._u, self._v, self._w,
            self.node_positions, tuple(labels))

    # -- serialization ---------------------------------------------------------

    def to_edge_list(self) -> str:
        """Edge-list text that round-trips exactly through from_edge_list.

        Weights are written with repr, which is the shortest string that
        parses back to the identical float.
        """
        lines = [f"nodes {self.node_count}"]
        for u, v, w in zip(self._u, self._v, self._w):
            lines.append(f"{int(u)} {int(v)} {float(w)!r}")
        return "\n".join(lines) + "\n"

    # -- comparisons -----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        """Structural equality on node count and edges; metadata is ignored."""
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self._u, other._u)
                and np.array_equal(self._v, other._v)
                and np.array_equal(self._w, other._w))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"WeightedGraph(nodes={self.node_count}, edges={self.edge_count})"


def _iter_lines(text: str | TextIO | Iterable[str]) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return text


def from_edge_list(text: str | TextIO | Iterable[str]) -> WeightedGraph:
    """Parse an edge list: lines of ``u v w`` with 0-based integer ids.

    ``#`` starts a comment, blank lines are skipped, and an optional
    ``nodes <n>`` header (before any edge) overrides the node count so
    trailing isolated nodes survive a round trip.  Rejects self-loops,
    duplicate unordered pairs, and non-positive weights, reporting the
    offending line number.
    """
    edges: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    declared: int | None = None
    max_id = -1
    for lineno, raw in enumerate(_iter_lines(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "nodes":
            if edges or declared is not None:
                raise GraphInputError(
                    f"line {lineno}: 'nodes' header must be the first entry")
            if len(fields) != 2:
                raise GraphInputError(f"line {lineno}: malformed header {line!r}")
            try:
                declared = int(fields[1])
            except ValueError:
                raise GraphInputError(
                    f"line {lineno}: malformed node count {fields[1]!r}") from None
            if declared < 0:
                raise GraphInputError(f"line {lineno}: negative node count")
            continue
        if len(fields) != 3:
            raise GraphInputError(
                f"line {lineno}: expected 'u v w', got {line!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
            w = float(fields[2])
        except ValueError:
            raise GraphInputError(f"line {lineno}: cannot parse {line!r}") from None
        if u < 0 or v < 0:
            raise GraphInputError(f"line {lineno}: negative node id")
        if u == v:
            raise GraphInputError(f"line {lineno}: self-loop at node {u}")
        if not w > 0:
            raise GraphInputError(f"line {lineno}: non-positive weight {fields[2]}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise GraphInputError(
                f"line {lineno}: duplicate edge for unordered pair {key}")
        seen.add(key)
        edges.append((u, v, w))
        max_id = max(max_id, u, v)
    node_count = (max_id + 1) if declared is None else declared
    if declared is not None and max_id >= declared:
        raise GraphInputError(
            f"header declares {declared} nodes but edge references id {max_id}")
    return WeightedGraph(node_count, edges)


def from_dense_matrix(text: str | TextIO) -> WeightedGraph:
    """Parse a dense symmetric adjacency matrix: n rows of n reals.

    Requires a zero diagonal, no negative entries, and symmetry within
    an absolute tolerance of 1e-12; the edge weight is taken from the
    upper triangle.
    """
    from io import StringIO

    source = StringIO(text) if isinstance(text, str) else text
    try:
        mat = np.loadtxt(source, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise GraphInputError(f"cannot parse dense matrix: {exc}") from exc
    n, m = mat.shape
    if n != m:
        raise GraphInputError(f"matrix is not square: {n} rows x {m} columns")
    if (np.diag(mat) != 0).any():
        bad = int((np.diag(mat) != 0).argmax())
        raise GraphInputError(f"non-zero diagonal entry at row {bad}")
    if (mat < 0).any():
        raise GraphInputError("negative entry in adjacency matrix")
    asym = np.abs(mat - mat.T).max() if n else 0.0
    if asym > DENSE_SYMMETRY_TOL:
        raise GraphInputError(
            f"matrix asymmetry {asym:.3e} exceeds tolerance {DENSE_SYMMETRY_TOL:.0e}")
    iu, iv = np.nonzero(np.triu(mat, 1) > 0)
    w = mat[iu, iv]
    return WeightedGraph._from_sorted_arrays(
        n, iu.astype(np.int64), iv.astype(np.int64), w.astype(np.float64))


def load_positions(text: str | TextIO | Iterable[str], node_count: int) -> np.ndarray:
    """Parse a positions file of ``id x y z`` lines into an (n, 3) array.

    Nodes without a line keep NaN coordinates.
    """
    pos = np.full((node_count, 3), np.nan)
    seen: set[int] = set()
    for lineno, raw in enumerate(_iter_lines(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise GraphInputError(f"line {lineno}: expected 'id x y z', got {line!r}")
        try:
            node = int(fields[0])
            xyz = [float(f) for f in fields[1:]]
        except ValueError:
            raise GraphInputError(f"line {lineno}: cannot parse {line!r}") from None
        if not 0 <= node < node_count:
            raise GraphInputError(f"line {lineno}: node id {node} out of range")
        if node in seen:
            raise GraphInputError(f"line {lineno}: duplicate position for node {node}")
        seen.add(node)
        pos[node] = xyz
    return pos
