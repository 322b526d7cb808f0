"""Immutable undirected graphs, edge-list I/O and the partial-observation reveal operators.

Nodes are dense integers ``0..n-1``.  A discovered subgraph is itself a
:class:`Graph` whose ``origin`` array maps each local node to its id in the
hidden graph; local ids are assigned in ascending hidden-id order so the same
node set always yields the same local numbering.
"""
from __future__ import annotations

import io
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParseError
from .kernels.centrality import betweenness_kernel


class Graph:
    __slots__ = ("indptr", "indices", "edge_ids", "edges", "labels", "origin", "_label_index", "_local_index")

    def __init__(self, n: int, edges=None, labels: Sequence[str] | None = None, origin=None):
        if n < 0:
            raise DomainError("node count must be nonnegative")
        e = np.asarray(edges if edges is not None else np.empty((0, 2)), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise DomainError(f"edge endpoint outside [0, {n})")
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        if len(e):
            e = np.unique(e, axis=0)
        self.edges = e
        self.edges.setflags(write=False)
        m = len(e)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.edge_ids = eid[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        for arr in (self.indices, self.edge_ids, self.indptr):
            arr.setflags(write=False)
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != n:
                raise DomainError("label count does not match node count")
        self.labels = labels
        if origin is not None:
            origin = np.asarray(origin, dtype=np.int64)
            if origin.shape != (n,):
                raise DomainError("origin must have one entry per node")
            origin.setflags(write=False)
        self.origin = origin
        self._label_index = None
        self._local_index = None

    # -- basic accessors ---------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    def __len__(self):
        return self.node_count

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)

    def node_of(self, label: str) -> int:
        if self.labels is None:
            return int(label)
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        return self._label_index[label]

    # -- subgraph bookkeeping ---------------------------------------------
    def hidden_ids(self) -> np.ndarray:
        """Ids of this graph's nodes in the graph it was discovered from."""
        return self.origin if self.origin is not None else np.arange(self.node_count)

    def local(self, hidden_id: int) -> int:
        """Local index of a hidden-graph node; ``KeyError`` if not present."""
        if self.origin is None:
            if 0 <= hidden_id < self.node_count:
                return int(hidden_id)
            raise KeyError(hidden_id)
        if self._local_index is None:
            self._local_index = {int(h): i for i, h in enumerate(self.origin)}
        return self._local_index[int(hidden_id)]

    def contains(self, hidden_id: int) -> bool:
        try:
            self.local(hidden_id)
        except KeyError:
            return False
        return True

    def hidden_edges(self) -> np.ndarray:
        return self.hidden_ids()[self.edges] if len(self.edges) else self.edges

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        if len(self.edges):
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def relabeled(self, perm) -> "Graph":
        """Graph with node ``i`` renamed to ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        labels = None if self.labels is None else [self.labels[i] for i in inv]
        origin = None if self.origin is None else self.origin[inv]
        return Graph(self.node_count, perm[self.edges], labels, origin)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.hidden_ids(), other.hidden_ids())
        )

    def __hash__(self):
        return hash((self.node_count, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.num_edges})"


def subgraph(hidden: Graph, nodes, edges) -> Graph:
    """Build a discovered graph from hidden-id node and edge arrays."""
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    local = np.searchsorted(nodes, edges) if len(edges) else edges
    labels = None if hidden.labels is None else [hidden.labels[i] for i in nodes]
    return Graph(len(nodes), local, labels, origin=nodes)


# -- edge lists -------------------------------------------------------------
def parse_edge_list(text) -> Graph:
    """Parse whitespace-separated ``u v`` lines; labels are interned in order of first appearance."""
    lines = text.splitlines() if isinstance(text, str) else text
    index: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 tokens, found {len(tokens)}", line=lineno)
        ids = []
        for tok in tokens:
            if tok not in index:
                index[tok] = len(index)
            ids.append(index[tok])
        edges.append(ids)
    return Graph(len(index), edges, labels=list(index))


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def serialize_edge_list(g: Graph) -> str:
    """Inverse of :func:`parse_edge_list`; isolated nodes are written as self-loops."""
    out = io.StringIO()
    deg = g.degrees
    for u in range(g.node_count):
        if deg[u] == 0:
            out.write(f"{g.label(u)} {g.label(u)}\n")
    for u, v in g.edges:
        out.write(f"{g.label(u)} {g.label(v)}\n")
    return out.getvalue()


def write_edge_list(g: Graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_edge_list(g))


# -- observation model ------------------------------------------------------
def _check_ids(hidden: Graph, ids):
    ids = np.asarray(sorted(set(int(s) for s in ids)), dtype=np.int64)
    if len(ids) and (ids[0] < 0 or ids[-1] >= hidden.node_count):
        raise DomainError("node id outside hidden graph")
    return ids


def initial_observation(hidden: Graph, seeds: Iterable[int]) -> Graph:
    """Seeds, their neighbours, and every edge with at least one seed endpoint."""
    seeds = _check_ids(hidden, seeds)
    nodes = [seeds]
    edges = []
    for s in seeds:
        nb = hidden.neighbors(s)
        nodes.append(nb)
        edges.append(np.column_stack([np.full(len(nb), s), nb]))
    return subgraph(hidden, np.concatenate(nodes), np.concatenate(edges) if edges else [])


def reveal_neighbors(hidden: Graph, observed: Graph, u: int) -> Graph:
    """Query hidden node ``u``: add its neighbours and the edges incident to it."""
    u = int(u)
    if not (0 <= u < hidden.node_count) or not observed.contains(u):
        raise DomainError(f"node {u} is not in the observed graph")
    nb = hidden.neighbors(u)
    nodes = np.concatenate([observed.hidden_ids(), nb])
    edges = np.concatenate([observed.hidden_edges().reshape(-1, 2), np.column_stack([np.full(len(nb), u), nb])])
    return subgraph(hidden, nodes, edges)


# -- centrality -------------------------------------------------------------
def betweenness_centrality(g: Graph) -> np.ndarray:
    """Unnormalised Brandes betweenness; each unordered pair counted once."""
    return betweenness_kernel(g.indptr, g.indices)


def degree_centrality(g: Graph) -> np.ndarray:
    n = g.node_count
    if n < 2:
        raise DomainError("degree centrality needs at least two nodes")
    return g.degrees / (n - 1)
