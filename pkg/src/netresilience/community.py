"""Weighted Newman modularity and a seeded Louvain maximizer.

The Louvain implementation is deterministic given ``(seed, restarts)``:
node visitation order is shuffled by a seeded PCG64 generator and the
best restart is chosen by modularity with ties broken by the lexico-
graphically smallest canonical assignment.  An exhaustive set-partition
oracle covers graphs of up to 12 nodes for testing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EdgelessGraphError, GraphInputError
from .graph import WeightedGraph

__all__ = [
    "Partition",
    "exhaustive_best_partition",
    "louvain",
    "modularity",
    "parse_partition",
    "write_partition",
]

# Accept a local move only if it improves Q by more than this.
Q_GAIN_TOL = 1e-10

EXHAUSTIVE_MAX_NODES = 12

DEFAULT_RESTARTS = 10


def _canonical_labels(labels: Sequence[int]) -> tuple[int, ...]:
    """Relabel communities densely in order of first appearance by node id."""
    remap: dict[int, int] = {}
    out = []
    for lab in labels:
        dense = remap.get(lab)
        if dense is None:
            dense = len(remap)
            remap[lab] = dense
        out.append(dense)
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """Assignment of every node to one community, with its modularity."""

    assignment: tuple[int, ...]
    community_count: int
    q: float

    @classmethod
    def from_assignment(cls, g: WeightedGraph, labels: Sequence[int]) -> "Partition":
        """Canonicalize labels and score them against g."""
        canon = _canonical_labels(labels)
        q = _modularity_of_labels(g, canon)
        return cls(canon, (max(canon) + 1) if canon else 0, q)

    def communities(self) -> list[list[int]]:
        members: list[list[int]] = [[] for _ in range(self.community_count)]
        for node, c in enumerate(self.assignment):
            members[c].append(node)
        return members


def _modularity_of_labels(g: WeightedGraph, labels: Sequence[int]) -> float:
    if len(labels) != g.node_count:
        raise ValueError(
            f"assignment covers {len(labels)} nodes, graph has {g.node_count}")
    if g.edge_count == 0:
        raise EdgelessGraphError("modularity undefined for an edgeless graph")
    lab = np.asarray(labels, dtype=np.int64)
    if lab.size and lab.min() < 0:
        raise ValueError("community ids must be non-negative")
    u, v, w = g.edge_arrays()
    m = g.total_weight
    intra = float(w[lab[u] == lab[v]].sum())
    strength_per_comm = np.bincount(lab, weights=g.strengths())
    return intra / m - float((strength_per_comm ** 2).sum()) / (4.0 * m * m)


def modularity(g: WeightedGraph, p: Partition) -> float:
    """Newman's weighted modularity Q of a partition.

    Q = (1/2m) * sum_ij [A_ij - s_i s_j / 2m] * delta(c_i, c_j) with m the
    total edge weight and s the weighted strengths.  The all-in-one
    partition scores 0 and uniform weight scaling leaves Q unchanged.
    """
    return _modularity_of_labels(g, p.assignment)


# -- Louvain ------------------------------------------------------------------


def louvain(g: WeightedGraph, seed: int = 0,
            restarts: int = DEFAULT_RESTARTS) -> Partition:
    """Greedy two-phase modularity maximization, best of ``restarts`` runs.

    Each restart shuffles node visitation with an independent child
    stream of the seed and alternates local moving with community
    aggregation until no move gains more than Q_GAIN_TOL.  The returned
    q is recomputed with :func:`modularity`, so it matches that operation
    bit for bit.
    """
    if g.edge_count == 0:
        raise EdgelessGraphError("louvain undefined for an edgeless graph")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    best: tuple[float, tuple[int, ...]] | None = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        canon = _canonical_labels(_louvain_once(g, rng))
        q = _modularity_of_labels(g, canon)
        if best is None or q > best[0] or (q == best[0] and canon < best[1]):
            best = (q, canon)
    q, canon = best
    return Partition(canon, max(canon) + 1, q)


def _louvain_once(g: WeightedGraph, rng: np.random.Generator) -> list[int]:
    adj = g.adjacency_lists()
    loops = [0.0] * g.node_count  # aggregated intra-community weight
    m = g.total_weight
    membership = list(range(g.node_count))
    while True:
        community, moved = _one_level(adj, loops, m, rng)
        if not moved:
            return membership
        dense = _canonical_labels(community)
        membership = [dense[community_of] for community_of in
                      (community[c] for c in membership)]
        # collapse: membership currently maps original node -> level node;
        # after the line above it maps original node -> new community id
        adj, loops = _aggregate(adj, loops, dense)
        if len(adj) == 1:
            return membership


def _one_level(adj: list[dict[int, float]], loops: list[float], m: float,
               rng: np.random.Generator) -> tuple[list[int], bool]:
    """Local-moving phase; returns (community per node, any node moved)."""
    n = len(adj)
    community = list(range(n))
    # strength includes the self-loop twice, matching the collapsed graph
    k = [sum(adj[i].values()) + 2.0 * loops[i] for i in range(n)]
    tot = k.copy()
    two_m_sq = 2.0 * m * m
    moved_any = False
    while True:
        moved = 0
        for i in rng.permutation(n):
            i = int(i)
            ci = community[i]
            ki = k[i]
            weight_to: dict[int, float] = {}
            for j, wij in adj[i].items():
                cj = community[j]
                weight_to[cj] = weight_to.get(cj, 0.0) + wij
            tot[ci] -= ki
            base = weight_to.get(ci, 0.0) / m - ki * tot[ci] / two_m_sq
            best_c, best_score = ci, base
            for c, wic in weight_to.items():
                if c == ci:
                    continue
                score = wic / m - ki * tot[c] / two_m_sq
                if score > best_score:
                    best_c, best_score = c, score
            if best_c != ci and best_score - base > Q_GAIN_TOL:
                community[i] = best_c
                tot[best_c] += ki
                moved += 1
            else:
                tot[ci] += ki
        if moved == 0:
            break
        moved_any = True
    return community, moved_any


def _aggregate(adj: list[dict[int, float]], loops: list[float],
               dense: Sequence[int]) -> tuple[list[dict[int, float]], list[float]]:
    """Collapse communities into super-nodes; intra weight becomes a loop."""
    nc = max(dense) + 1
    new_adj: list[dict[int, float]] = [{} for _ in range(nc)]
    new_loops = [0.0] * nc
    for i, loop in enumerate(loops):
        new_loops[dense[i]] += loop
    for i, nbrs in enumerate(adj):
        ci = dense[i]
        for j, wij in nbrs.items():
            if j <= i:
                continue  # visit each undirected edge once
            cj = dense[j]
            if ci == cj:
                new_loops[ci] += wij
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + wij
                new_adj[cj][ci] = new_adj[cj].get(ci, 0.0) + wij
    return new_adj, new_loops


# -- exhaustive oracle --------------------------------------------------------


def _restricted_growth_strings(n: int) -> Iterator[list[int]]:
    """All set partitions of range(n) as canonical label vectors.

    Enumeration is lexicographic over restricted growth strings: a[0] = 0
    and a[i] <= 1 + max(a[:i]).  This order is the documented tie-break
    for the oracle.
    """
    if n == 0:
        yield []
        return
    a = [0] * n
    b = [1] * n  # b[j] = 1 + max(a[:j]); b[0] unused
    while True:
        yield a
        j = n - 1
        while j > 0 and a[j] == b[j]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        cap = max(b[j], a[j] + 1)
        for k in range(j + 1, n):
            a[k] = 0
            b[k] = cap


def exhaustive_best_partition(g: WeightedGraph) -> Partition:
    """Argmax-Q partition by brute force over all set partitions.

    Only feasible for small graphs (n <= 12, Bell(12) ~ 4.2e6); ties are
    broken by the first optimum in restricted-growth-string order.
    """
    n = g.node_count
    if n > EXHAUSTIVE_MAX_NODES:
        raise ValueError(
            f"exhaustive search limited to {EXHAUSTIVE_MAX_NODES} nodes, got {n}")
    if g.edge_count == 0:
        raise EdgelessGraphError("modularity undefined for an edgeless graph")
    eu, ev, ew = g.edge_arrays()
    edges = list(zip(eu.tolist(), ev.tolist(), ew.tolist()))
    s = g.strengths().tolist()
    m = g.total_weight
    inv_m = 1.0 / m
    inv_4m2 = 1.0 / (4.0 * m * m)
    best_q = -np.inf
    best: list[int] | None = None
    for a in _restricted_growth_strings(n):
        intra = 0.0
        for u, v, w in edges:
            if a[u] == a[v]:
                intra += w
        sums = [0.0] * (max(a) + 1)
        for node in range(n):
            sums[a[node]] += s[node]
        q = intra * inv_m - sum(x * x for x in sums) * inv_4m2
        if q > best_q:
            best_q = q
            best = a.copy()
    return Partition.from_assignment(g, best)


# -- serialization ------------------------------------------------------------


def write_partition(p: Partition) -> str:
    """Partition text: a JSON header comment, then ``node community`` lines."""
    header = json.dumps({"q": p.q, "community_count": p.community_count},
                        sort_keys=True)
    lines = [f"# {header}"]
    lines.extend(f"{node} {c}" for node, c in enumerate(p.assignment))
    return "\n".join(lines) + "\n"


def parse_partition(text: str | Iterable[str]) -> tuple[int, ...]:
    """Read ``node community`` lines back into a label vector.

    The JSON header is ignored; scores are recomputed against a graph via
    Partition.from_assignment.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    pairs: dict[int, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise GraphInputError(
                f"line {lineno}: expected 'node community', got {line!r}")
        try:
            node, c = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphInputError(f"line {lineno}: cannot parse {line!r}") from None
        if node in pairs:
            raise GraphInputError(f"line {lineno}: duplicate node {node}")
        pairs[node] = c
    if not pairs:
        raise GraphInputError("empty partition file")
    n = max(pairs) + 1
    if sorted(pairs) != list(range(n)):
        missing = next(i for i in range(n) if i not in pairs)
        raise GraphInputError(f"node {missing} missing from partition")
    return tuple(pairs[i] for i in range(n))
