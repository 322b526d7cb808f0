"""Community detection, block-model fitting and synthetic training graphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import BaselineCache, EnvConfig, precompute_baselines
from .errors import DomainError, ParseError
from .graph import Graph

MIN_GAIN = 1e-7


@dataclass(frozen=True)
class Partition:
    membership: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.membership, dtype=np.int64)
        if m.size and (m.min() < 0 or set(np.unique(m)) != set(range(int(m.max()) + 1))):
            raise DomainError("community indices must be dense from 0")
        object.__setattr__(self, "membership", m)

    @property
    def count(self) -> int:
        return int(self.membership.max()) + 1 if self.membership.size else 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.count)

    def communities(self) -> list:
        return [np.flatnonzero(self.membership == c) for c in range(self.count)]

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        _, dense = np.unique(np.asarray(labels), return_inverse=True)
        return cls(dense)


def modularity(g: Graph, part: Partition, resolution: float = 1.0) -> float:
    m = g.num_edges
    if m == 0:
        return 0.0
    c = part.membership
    internal = np.bincount(c[g.edges[:, 0]][c[g.edges[:, 0]] == c[g.edges[:, 1]]], minlength=part.count)
    tot = np.bincount(c, weights=g.degrees, minlength=part.count)
    return float((internal / m - resolution * (tot / (2.0 * m)) ** 2).sum())


# -- Louvain -------------------------------------------------------------------------
def _local_moves(adj: list, k: np.ndarray, m2: float, order, comm: np.ndarray) -> bool:
    """One level of greedy node moves; ``adj[i]`` maps neighbour -> weight (no self loops)."""
    tot = np.bincount(comm, weights=k, minlength=len(k)).astype(np.float64)
    moved = False
    improved = True
    while improved:
        improved = False
        for i in order:
            ci = comm[i]
            links: dict = {}
            for j, w in adj[i].items():
                links[comm[j]] = links.get(comm[j], 0.0) + w
            tot[ci] -= k[i]
            best, best_gain = ci, links.get(ci, 0.0) - tot[ci] * k[i] / m2
            for c, w in links.items():
                gain = w - tot[c] * k[i] / m2
                if gain > best_gain + MIN_GAIN:
                    best, best_gain = c, gain
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved = improved = True
    return moved


def louvain(g: Graph, rng) -> Partition:
    """Greedy modularity maximisation with aggregation (resolution 1)."""
    if g.node_count == 0:
        raise DomainError("graph is empty")
    if g.num_edges == 0:
        return Partition(np.arange(g.node_count))
    adj = [dict() for _ in range(g.node_count)]
    for u, v in g.edges:
        adj[u][v] = adj[v][u] = 1.0
    self_w = np.zeros(g.node_count)
    node_comm = np.arange(g.node_count)
    m2 = 2.0 * g.num_edges
    while True:
        n = len(adj)
        k = np.array([sum(a.values()) for a in adj]) + 2.0 * self_w
        comm = np.arange(n)
        if not _local_moves(adj, k, m2, rng.permutation(n), comm):
            break
        _, comm = np.unique(comm, return_inverse=True)
        node_comm = comm[node_comm]
        nc = int(comm.max()) + 1
        new_adj = [dict() for _ in range(nc)]
        new_self = np.bincount(comm, weights=self_w, minlength=nc).astype(np.float64)
        for i in range(n):
            ci = comm[i]
            for j, w in adj[i].items():
                cj = comm[j]
                if ci == cj:
                    new_self[ci] += w / 2.0
                else:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
        adj, self_w = new_adj, new_self
    return Partition.from_labels(node_comm)


# -- block models --------------------------------------------------------------------
@dataclass(frozen=True)
class SBMModel:
    community_sizes: tuple
    p_in: tuple
    p_out: float

    def __post_init__(self):
        if len(self.community_sizes) != len(self.p_in):
            raise DomainError("one p_in per community")
        if any(s < 1 for s in self.community_sizes):
            raise DomainError("community sizes must be positive")
        if not all(0.0 <= p <= 1.0 for p in (*self.p_in, self.p_out)):
            raise DomainError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class SSMModel:
    community_sizes: tuple
    p_out: float

    def __post_init__(self):
        if any(s < 1 for s in self.community_sizes):
            raise DomainError("community sizes must be positive")
        if not 0.0 <= self.p_out <= 1.0:
            raise DomainError("p_out must lie in [0, 1]")


def _edge_counts(g: Graph, part: Partition):
    if part.membership.shape[0] != g.node_count:
        raise DomainError("partition does not cover the graph")
    c = part.membership
    cu, cv = c[g.edges[:, 0]], c[g.edges[:, 1]]
    internal = np.bincount(cu[cu == cv], minlength=part.count)
    return internal, int((cu != cv).sum())


def _p_out(sizes: np.ndarray, cross: int) -> float:
    pairs = (sizes.sum() ** 2 - (sizes ** 2).sum()) / 2
    return float(cross / pairs) if pairs else 0.0


def fit_sbm(g: Graph, part: Partition) -> SBMModel:
    internal, cross = _edge_counts(g, part)
    sizes = part.sizes()
    pairs = sizes * (sizes - 1) / 2
    p_in = tuple(float(e / p) if p else 0.0 for e, p in zip(internal, pairs))
    return SBMModel(tuple(int(s) for s in sizes), p_in, _p_out(sizes, cross))


def fit_ssm(g: Graph, part: Partition) -> SSMModel:
    _, cross = _edge_counts(g, part)
    sizes = part.sizes()
    return SSMModel(tuple(int(s) for s in sizes), _p_out(sizes, cross))


def _cross_edges(sizes, p_out, rng):
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n = int(offsets[-1])
    block = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(n, k=1)
    keep = block[iu] != block[ju]
    iu, ju = iu[keep], ju[keep]
    hit = rng.random(iu.size) < p_out
    return offsets, n, np.stack([iu[hit], ju[hit]], axis=1)


def sample_sbm(model: SBMModel, rng) -> Graph:
    offsets, n, cross = _cross_edges(model.community_sizes, model.p_out, rng)
    parts = [cross]
    for c, (size, p) in enumerate(zip(model.community_sizes, model.p_in)):
        iu, ju = np.triu_indices(size, k=1)
        hit = rng.random(iu.size) < p
        parts.append(np.stack([iu[hit], ju[hit]], axis=1) + offsets[c])
    return Graph(n, np.concatenate(parts))


def sample_ssm(model: SSMModel, rng) -> Graph:
    """Each community is a star on its first node; cross pairs are Bernoulli(p_out)."""
    offsets, n, cross = _cross_edges(model.community_sizes, model.p_out, rng)
    parts = [cross]
    for c, size in enumerate(model.community_sizes):
        hub = offsets[c]
        leaves = np.arange(hub + 1, hub + size)
        parts.append(np.stack([np.full(leaves.size, hub), leaves], axis=1))
    return Graph(n, np.concatenate(parts))


def sample_model(model, rng) -> Graph:
    return sample_sbm(model, rng) if isinstance(model, SBMModel) else sample_ssm(model, rng)


def model_to_text(model) -> str:
    kind = "SBM" if isinstance(model, SBMModel) else "SSM"
    lines = [f"{kind} {len(model.community_sizes)} {model.p_out!r}"]
    if kind == "SBM":
        lines += [f"{s} {p!r}" for s, p in zip(model.community_sizes, model.p_in)]
    else:
        lines += [str(s) for s in model.community_sizes]
    return "\n".join(lines) + "\n"


def model_from_text(text: str):
    lines = [ln.split() for ln in text.strip().splitlines()]
    try:
        kind, k, p_out = lines[0][0], int(lines[0][1]), float(lines[0][2])
        rows = lines[1:]
        if len(rows) != k:
            raise ParseError(f"expected {k} community lines, found {len(rows)}", line=1)
        if kind == "SBM":
            return SBMModel(tuple(int(r[0]) for r in rows), tuple(float(r[1]) for r in rows), p_out)
        if kind == "SSM":
            return SSMModel(tuple(int(r[0]) for r in rows), p_out)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed model text: {exc}", line=1) from None
    raise ParseError(f"unknown model kind {kind!r}", line=1)


def fit_model(g: Graph, kind: str, rng):
    part = louvain(g, rng)
    if kind == "sbm":
        return fit_sbm(g, part)
    if kind == "ssm":
        return fit_ssm(g, part)
    raise DomainError(f"unknown model kind {kind!r}")


# -- a family with hubs hidden behind bridge nodes ----------------------------------------
def hidden_hub_graph(rng, hubs: int = 4, leaves: int = 4, hub_bridges: int = 40, periphery_bridges: int = 4,
                     cliques: int = 6, clique_size: int = 7) -> Graph:
    """Star hubs reachable only through degree-2 bridge nodes.

    ``hub_bridges`` bridges each join two distinct hubs, ``periphery_bridges``
    join a hub to a periphery made of disjoint cliques.  Node ids are shuffled
    so no structural role correlates with id order.
    """
    if hubs < 2:
        raise DomainError("need at least two hubs")
    edges = []
    for c in range(cliques):
        base = c * clique_size
        edges += [(base + i, base + j) for i in range(clique_size) for j in range(i + 1, clique_size)]
    periphery = cliques * clique_size
    hub_ids = list(range(periphery, periphery + hubs))
    nxt = periphery + hubs
    for h in hub_ids:
        edges += [(h, nxt + i) for i in range(leaves)]
        nxt += leaves
    for _ in range(hub_bridges):
        a, b = rng.choice(hub_ids, size=2, replace=False)
        edges += [(int(a), nxt), (nxt, int(b))]
        nxt += 1
    for _ in range(periphery_bridges if periphery else 0):
        edges += [(hub_ids[rng.integers(hubs)], nxt), (nxt, int(rng.integers(periphery)))]
        nxt += 1
    perm = rng.permutation(nxt)
    return Graph(nxt, [(int(perm[a]), int(perm[b])) for a, b in edges])


# -- per-episode training graph source -----------------------------------------------
class GraphSource:
    """Mixes real training graphs with synthetic graphs sampled from their fitted models.

    With ``pregenerate`` set, each model contributes a fixed pool of that many
    samples instead of drawing a fresh graph every time.
    """

    def __init__(self, graphs, models: dict, env_cfg: EnvConfig, baselines: dict, mix_prob: float = 0.5,
                 change_runs: int = 30, pregenerate: int | None = None, rng=None):
        if not 0.0 <= mix_prob <= 1.0:
            raise DomainError("mix_prob must lie in [0, 1]")
        if not graphs:
            raise DomainError("need at least one training graph")
        self.graphs = list(graphs)
        self.models = models
        self.env_cfg = env_cfg
        self.baselines = dict(baselines)
        self.mix_prob = mix_prob
        self.change_runs = change_runs
        self.pools: dict = {}
        self.synthetic_draws = 0
        self._counter = 0
        if pregenerate is not None:
            if rng is None:
                raise DomainError("pregenerated pools need an rng")
            for name, _ in self.graphs:
                self.pools[name] = [self._make(name, rng) for _ in range(pregenerate)]

    def _make(self, name, rng):
        g = sample_model(self.models[name], rng)
        label = f"{name}~synth{self._counter}"
        self._counter += 1
        return label, g

    def _cache(self, label, g, rng) -> BaselineCache:
        if label not in self.baselines:
            self.baselines[label] = precompute_baselines(g, self.env_cfg, self.change_runs, rng)
        return self.baselines[label]

    def draw(self, rng):
        name, g = self.graphs[rng.integers(len(self.graphs))]
        if self.mix_prob > 0 and rng.random() < self.mix_prob:
            self.synthetic_draws += 1
            pool = self.pools.get(name)
            label, g = pool[rng.integers(len(pool))] if pool else self._make(name, rng)
            return label, g, self._cache(label, g, rng)
        return name, g, self._cache(name, g, rng)


def graph_source(train_graphs, models: dict, env_cfg: EnvConfig, baselines: dict, rng, mix_prob: float = 0.5,
                 **kwargs) -> GraphSource:
    return GraphSource(train_graphs, models, env_cfg, baselines, mix_prob, rng=rng, **kwargs)
