"""Independent cascade simulation, influence estimation and the greedy seed oracle."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapacityError, DomainError
from .graph import Graph
from .kernels.cascade import marginal_gains, reach_masks, spread_counts

MAX_EXACT_EDGES = 20
_CHUNK = 8192


@dataclass(frozen=True)
class CascadeConfig:
    p: float = 0.1
    num_sims: int = 100

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"activation probability must lie in [0, 1], got {self.p}")
        if self.num_sims < 1:
            raise DomainError("num_sims must be positive")


def _seed_array(g: Graph, seeds: Iterable[int]) -> np.ndarray:
    s = np.array(sorted(set(int(x) for x in seeds)), dtype=np.int64)
    if len(s) and (s[0] < 0 or s[-1] >= g.node_count):
        raise DomainError("seed outside graph")
    return s


def _draw_live(g: Graph, p: float, sims: int, rng) -> np.ndarray:
    return rng.random((sims, g.num_edges)) < p


def simulate_icm(g: Graph, seeds, p: float, rng) -> int:
    """One cascade realisation; returns the number of activated nodes."""
    s = _seed_array(g, seeds)
    if len(s) == 0:
        return 0
    live = _draw_live(g, p, 1, rng)
    return int(spread_counts(g.indptr, g.indices, g.edge_ids, s, live)[0])


def spread_samples(g: Graph, seeds, p: float, num_sims: int, rng) -> np.ndarray:
    """Activated-node counts of ``num_sims`` independent cascades."""
    s = _seed_array(g, seeds)
    if len(s) == 0:
        return np.zeros(num_sims, dtype=np.int64)
    out = []
    for start in range(0, num_sims, _CHUNK):
        live = _draw_live(g, p, min(_CHUNK, num_sims - start), rng)
        out.append(spread_counts(g.indptr, g.indices, g.edge_ids, s, live))
    return np.concatenate(out)


def estimate_influence(g: Graph, seeds, cfg: CascadeConfig, rng) -> float:
    return float(spread_samples(g, seeds, cfg.p, cfg.num_sims, rng).mean())


def exact_influence(g: Graph, seeds, p: float) -> float:
    """Expected spread by enumerating all 2^|E| live-edge subsets."""
    m = g.num_edges
    if m > MAX_EXACT_EDGES:
        raise CapacityError(f"exact influence enumerates 2^|E| subsets; |E|={m} exceeds {MAX_EXACT_EDGES}")
    s = _seed_array(g, seeds)
    if len(s) == 0:
        return 0.0
    bits = np.arange(m, dtype=np.int64)
    total = 0.0
    n_masks = 1 << m
    for start in range(0, n_masks, 1 << 16):
        masks = np.arange(start, min(n_masks, start + (1 << 16)), dtype=np.int64)
        live = ((masks[:, None] >> bits) & 1).astype(bool)
        k = live.sum(axis=1)
        weight = p ** k * (1.0 - p) ** (m - k)
        counts = spread_counts(g.indptr, g.indices, g.edge_ids, s, live)
        total += float(np.dot(weight, counts))
    return total


def _best(gains: np.ndarray, candidates: np.ndarray) -> int:
    # candidates ascend, so argmax returns the smallest id among ties
    return int(np.argmax(gains))


def greedy_select(g: Graph, k: int, cfg: CascadeConfig, rng, *, exact: bool = False, lazy: bool = False) -> tuple:
    """Greedy influence maximisation; returns the chosen nodes in selection order.

    Marginal gains within a round are estimated on one shared batch of
    live-edge draws, so every candidate faces the same cascades.  With
    ``exact=True`` the objective is :func:`exact_influence` instead.
    """
    if k < 1:
        raise DomainError("k must be positive")
    n = g.node_count
    if n == 0:
        raise DomainError("cannot select seeds from an empty graph")
    if k >= n:
        return tuple(range(n))
    if exact:
        return _greedy_exact(g, k, cfg.p)
    if lazy:
        return _greedy_lazy(g, k, cfg, rng)
    chosen: list[int] = []
    in_set = np.zeros(n, dtype=bool)
    for _ in range(k):
        live = _draw_live(g, cfg.p, cfg.num_sims, rng)
        covered = reach_masks(g.indptr, g.indices, g.edge_ids, np.array(chosen, dtype=np.int64), live)
        candidates = np.flatnonzero(~in_set)
        gains = marginal_gains(g.indptr, g.indices, g.edge_ids, live, covered, candidates)
        v = int(candidates[_best(gains, candidates)])
        chosen.append(v)
        in_set[v] = True
    return tuple(chosen)


def _greedy_lazy(g: Graph, k: int, cfg: CascadeConfig, rng) -> tuple:
    chosen: list[int] = []
    heap: list = []
    for rnd in range(k):
        live = _draw_live(g, cfg.p, cfg.num_sims, rng)
        covered = reach_masks(g.indptr, g.indices, g.edge_ids, np.array(chosen, dtype=np.int64), live)
        if rnd == 0:
            cand = np.arange(g.node_count)
            gains = marginal_gains(g.indptr, g.indices, g.edge_ids, live, covered, cand)
            heap = [(-int(x), int(v), rnd) for v, x in zip(cand, gains)]
            heapq.heapify(heap)
        while True:
            neg, v, stamp = heapq.heappop(heap)
            if stamp == rnd:
                chosen.append(v)
                break
            gain = int(marginal_gains(g.indptr, g.indices, g.edge_ids, live, covered, np.array([v]))[0])
            heapq.heappush(heap, (-gain, v, rnd))
    return tuple(chosen)


def _greedy_exact(g: Graph, k: int, p: float) -> tuple:
    chosen: list[int] = []
    for _ in range(k):
        best_v, best_val = -1, -np.inf
        for v in range(g.node_count):
            if v in chosen:
                continue
            val = exact_influence(g, chosen + [v], p)
            if val > best_val + 1e-12:
                best_v, best_val = v, val
        chosen.append(best_v)
    return tuple(chosen)
