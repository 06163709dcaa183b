"""Directed user graph: construction, components, and structure statistics.

The graph is immutable after construction and canonical: user ids are
re-indexed in sorted order and edges are stored deduplicated and sorted, so
no downstream result depends on the order edges were supplied in.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DataFormatError

UserId = str


class UserGraph:
    """Immutable directed follower graph (edge u -> v means u follows v)."""

    def __init__(self, user_ids: Sequence[UserId], src: np.ndarray, dst: np.ndarray):
        # Internal constructor: `user_ids` must be sorted and unique, and
        # (src, dst) must already be deduplicated, self-loop-free index pairs
        # in lexicographic order. Use build_graph() for raw edge lists.
        self.user_ids: tuple[UserId, ...] = tuple(user_ids)
        self._index = {u: i for i, u in enumerate(self.user_ids)}
        self.edge_src = np.asarray(src, dtype=np.int64)
        self.edge_dst = np.asarray(dst, dtype=np.int64)
        self.node_count = len(self.user_ids)
        self.edge_count = int(self.edge_src.shape[0])
        self._out_indptr, self._out_indices = _build_csr(
            self.edge_src, self.edge_dst, self.node_count
        )
        self._in_indptr, self._in_indices = _build_csr(
            self.edge_dst, self.edge_src, self.node_count
        )

    def index_of(self, user_id: UserId) -> int:
        try:
            return self._index[user_id]
        except KeyError:
            raise KeyError(f"unknown user {user_id!r}") from None

    def __contains__(self, user_id: UserId) -> bool:
        return user_id in self._index

    def out_neighbors(self, i: int) -> np.ndarray:
        return self._out_indices[self._out_indptr[i] : self._out_indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self._in_indices[self._in_indptr[i] : self._in_indptr[i + 1]]

    @property
    def out_indptr(self) -> np.ndarray:
        return self._out_indptr

    @property
    def out_indices(self) -> np.ndarray:
        return self._out_indices

    @property
    def in_indptr(self) -> np.ndarray:
        return self._in_indptr

    @property
    def in_indices(self) -> np.ndarray:
        return self._in_indices

    @cached_property
    def _undirected(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric adjacency of the undirected projection, parallel-edge free."""
        lo = np.minimum(self.edge_src, self.edge_dst)
        hi = np.maximum(self.edge_src, self.edge_dst)
        enc = np.unique(lo * self.node_count + hi)
        lo, hi = enc // self.node_count, enc % self.node_count
        return _build_csr(
            np.concatenate([lo, hi]), np.concatenate([hi, lo]), self.node_count
        )

    @property
    def und_indptr(self) -> np.ndarray:
        return self._undirected[0]

    @property
    def und_indices(self) -> np.ndarray:
        return self._undirected[1]

    def und_neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._undirected
        return indices[indptr[i] : indptr[i + 1]]

    @cached_property
    def und_degrees(self) -> np.ndarray:
        return np.diff(self.und_indptr)

    def __repr__(self) -> str:
        return f"UserGraph(nodes={self.node_count}, edges={self.edge_count})"


def _build_csr(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency from index pairs; rows sorted, neighbor lists sorted."""
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int64, copy=False)


def build_graph(
    edge_list: Iterable[tuple[UserId, UserId]],
    extra_nodes: Iterable[UserId] = (),
) -> UserGraph:
    """Build a deduplicated, self-loop-free directed graph from (src, dst) pairs.

    `extra_nodes` adds isolated users that appear in posts or labels but not
    in the edge list. Insertion order never affects the result.
    """
    srcs: list[UserId] = []
    dsts: list[UserId] = []
    for i, pair in enumerate(edge_list):
        try:
            a, b = pair
        except (TypeError, ValueError):
            raise DataFormatError(f"edge {i}: expected a (src, dst) pair, got {pair!r}")
        if not isinstance(a, str) or not isinstance(b, str) or not a or not b:
            raise DataFormatError(f"edge {i}: missing endpoint in ({a!r}, {b!r})")
        srcs.append(a)
        dsts.append(b)

    ids = sorted(set(srcs) | set(dsts) | set(extra_nodes))
    index = {u: i for i, u in enumerate(ids)}
    n = len(ids)
    if not srcs:
        return UserGraph(ids, np.empty(0, np.int64), np.empty(0, np.int64))

    src = np.fromiter((index[u] for u in srcs), dtype=np.int64, count=len(srcs))
    dst = np.fromiter((index[u] for u in dsts), dtype=np.int64, count=len(dsts))
    keep = src != dst
    enc = np.unique(src[keep] * n + dst[keep])
    return UserGraph(ids, enc // n, enc % n)


def from_indexed_edges(user_ids: Sequence[UserId], src: np.ndarray, dst: np.ndarray) -> UserGraph:
    """Graph from pre-indexed edges; `user_ids` must be sorted and unique."""
    n = len(user_ids)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keep = src != dst
    enc = np.unique(src[keep] * n + dst[keep])
    return UserGraph(user_ids, enc // n, enc % n)


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    clustering_coefficient: float
    powerlaw_gamma: float
    component_count: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "node_count": self.node_count,
                "edge_count": self.edge_count,
                "clustering_coefficient": self.clustering_coefficient,
                "powerlaw_gamma": self.powerlaw_gamma,
                "component_count": self.component_count,
            },
            sort_keys=True,
        )


def weak_components(g: UserGraph) -> tuple[int, np.ndarray]:
    """Component count and per-node component labels, ignoring edge direction."""
    adj = csr_matrix(
        (np.ones(g.edge_count, dtype=np.int8), (g.edge_src, g.edge_dst)),
        shape=(g.node_count, g.node_count),
    )
    return connected_components(adj, directed=True, connection="weak")


def largest_weakly_connected_component(g: UserGraph) -> UserGraph:
    """Induced subgraph on the largest direction-ignored component.

    Ties between equally large components go to the one containing the
    smallest node index, which is deterministic under the canonical ordering.
    """
    if g.node_count == 0:
        raise ValueError("empty graph has no components")
    n_comp, labels = weak_components(g)
    sizes = np.bincount(labels, minlength=n_comp)
    # first node sitting in a maximal component -> smallest min node index
    best = labels[int(np.argmax(sizes[labels] == sizes.max()))]
    return induced_subgraph(g, np.flatnonzero(labels == best))


def induced_subgraph(g: UserGraph, node_indices: np.ndarray) -> UserGraph:
    """Subgraph on the given node indices, re-indexed canonically."""
    node_indices = np.asarray(node_indices, dtype=np.int64)
    member = np.zeros(g.node_count, dtype=bool)
    member[node_indices] = True
    keep = member[g.edge_src] & member[g.edge_dst]
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[node_indices] = np.arange(node_indices.size)
    ids = [g.user_ids[i] for i in node_indices]
    return UserGraph(ids, remap[g.edge_src[keep]], remap[g.edge_dst[keep]])


def clustering_coefficient(g: UserGraph) -> float:
    """Mean local clustering coefficient of the undirected projection.

    Nodes with undirected degree < 2 contribute 0. This is the per-node
    average, not global transitivity.
    """
    if g.node_count == 0:
        raise ValueError("empty graph")
    indptr, indices = g.und_indptr, g.und_indices
    deg = g.und_degrees
    twice_triangles = np.zeros(g.node_count, dtype=np.float64)
    for u in range(g.node_count):
        nbrs_u = indices[indptr[u] : indptr[u + 1]]
        for v in nbrs_u:
            if v <= u:
                continue
            nbrs_v = indices[indptr[v] : indptr[v + 1]]
            common = np.intersect1d(nbrs_u, nbrs_v, assume_unique=True).size
            twice_triangles[u] += common
            twice_triangles[v] += common
    # each triangle at node u is reached via both of its incident edges
    local = np.zeros(g.node_count, dtype=np.float64)
    mask = deg >= 2
    possible = deg[mask].astype(np.float64) * (deg[mask] - 1)
    local[mask] = twice_triangles[mask] / possible
    return float(np.mean(local))


def powerlaw_gamma(g: UserGraph, d_min: int = 2) -> float:
    """Continuous MLE exponent of the undirected degree distribution.

    gamma = 1 + n / sum(ln(d_i / (d_min - 0.5))) over degrees d_i >= d_min.
    Fewer than two distinct degrees make the fit degenerate; +inf is
    returned as the degeneracy flag.
    """
    if d_min < 1:
        raise ValueError(f"d_min must be >= 1, got {d_min}")
    deg = g.und_degrees
    tail = deg[deg >= d_min]
    if tail.size == 0:
        raise ValueError(f"no node has undirected degree >= {d_min}")
    if np.unique(tail).size < 2:
        return math.inf
    return 1.0 + tail.size / float(np.sum(np.log(tail / (d_min - 0.5))))


def graph_stats(g: UserGraph, d_min: int = 2) -> GraphStats:
    n_comp, _ = weak_components(g) if g.node_count else (0, None)
    return GraphStats(
        node_count=g.node_count,
        edge_count=g.edge_count,
        clustering_coefficient=clustering_coefficient(g),
        powerlaw_gamma=powerlaw_gamma(g, d_min),
        component_count=int(n_comp),
    )


@dataclass
class EgoExport:
    """Focal user's ego network with per-node probability attributes."""

    center: UserId
    nodes: list[UserId]
    probs: list[float]
    edges: list[tuple[UserId, UserId]]

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": [
                    {"id": u, "prob": p} for u, p in zip(self.nodes, self.probs)
                ],
                "edges": [[a, b] for a, b in self.edges],
            }
        )

    def to_dot(self) -> str:
        lines = ["digraph ego {"]
        for u, p in zip(self.nodes, self.probs):
            lines.append(f'  {_dot_quote(u)} [prob="{p:.3f}"];')
        for a, b in self.edges:
            lines.append(f"  {_dot_quote(a)} -> {_dot_quote(b)};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def ego_network(
    g: UserGraph, u: UserId, probabilities: Mapping[UserId, float]
) -> EgoExport:
    """Induced subgraph on u plus its in- and out-neighbors.

    Nodes missing from `probabilities` default to 0.0.
    """
    ui = g.index_of(u)
    members = np.unique(
        np.concatenate([[ui], g.in_neighbors(ui), g.out_neighbors(ui)])
    )
    sub = induced_subgraph(g, members)
    nodes = list(sub.user_ids)
    return EgoExport(
        center=u,
        nodes=nodes,
        probs=[float(probabilities.get(v, 0.0)) for v in nodes],
        edges=[
            (nodes[a], nodes[b]) for a, b in zip(sub.edge_src, sub.edge_dst)
        ],
    )
