"""Hand-designed discovery policies.

Every sampler queries only legal nodes (never a seed, never twice), so its
query log replays exactly through :func:`netdiscover.env.step`.
"""
from __future__ import annotations

import csv
import logging
from collections import deque
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .graph import Graph, initial_observation, reveal_neighbors

log = logging.getLogger(__name__)


class Query(NamedTuple):
    t: int
    node: int
    observed_nodes: int


class _Discovery:
    def __init__(self, hidden: Graph, seeds):
        seeds = tuple(sorted(set(int(s) for s in seeds)))
        if not seeds:
            raise DomainError("sampler needs at least one seed")
        self.hidden = hidden
        self.seeds = frozenset(seeds)
        self.observed = initial_observation(hidden, seeds)
        self.queried: list[int] = []
        self.log: list[Query] = []

    def candidates(self) -> list[int]:
        return [int(v) for v in self.observed.hidden_ids() if int(v) not in self.seeds and int(v) not in self.queried]

    def degree(self, v: int) -> int:
        return int(self.observed.degrees[self.observed.local(v)])

    def query(self, u: int) -> list[int]:
        before = set(self.observed.hidden_ids().tolist())
        self.observed = reveal_neighbors(self.hidden, self.observed, u)
        self.log.append(Query(len(self.queried), u, self.observed.node_count))
        self.queried.append(u)
        return sorted(set(self.observed.hidden_ids().tolist()) - before)

    def result(self):
        return self.observed, list(self.log)


def _pick_uniform(nodes, rng) -> int:
    return int(nodes[rng.integers(len(nodes))])


def _pick_by_degree(d: _Discovery, nodes, rng, best) -> int:
    degs = np.array([d.degree(v) for v in nodes])
    ties = [v for v, x in zip(nodes, degs) if x == best(degs)]
    return _pick_uniform(ties, rng)


def sample_change(hidden: Graph, seeds, T: int, rng):
    """Query one uniformly random hidden-graph neighbour per seed, cycling seeds if ``T > |S|``."""
    d = _Discovery(hidden, seeds)
    order = [int(x) for x in rng.permutation(sorted(d.seeds))]
    if T < len(order):
        order = order[:T]
    for i in range(T):
        seed = order[i % len(order)]
        options = [int(w) for w in hidden.neighbors(seed) if int(w) not in d.seeds and int(w) not in d.queried]
        if not options:
            log.debug("CHANGE: seed %d has no unqueried non-seed neighbour, skipping", seed)
            continue
        d.query(_pick_uniform(options, rng))
    return d.result()


def sample_snowball(hidden: Graph, seeds, T: int, rng):
    """Breadth-first: FIFO of discovered, unqueried nodes."""
    d = _Discovery(hidden, seeds)
    queue = deque(int(x) for x in rng.permutation(d.candidates()))
    while len(d.queried) < T and queue:
        u = queue.popleft()
        if u in d.queried:
            continue
        fresh = d.query(u)
        queue.extend(int(x) for x in rng.permutation(fresh))
    return d.result()


def sample_recommend(hidden: Graph, seeds, T: int, rng):
    """Highest observed degree first."""
    d = _Discovery(hidden, seeds)
    while len(d.queried) < T:
        cands = d.candidates()
        if not cands:
            break
        d.query(_pick_by_degree(d, cands, rng, np.max))
    return d.result()


def sample_random_greedy(hidden: Graph, seeds, T: int, rng):
    d = _Discovery(hidden, seeds)
    while len(d.queried) < T:
        cands = d.candidates()
        if not cands:
            break
        d.query(_pick_uniform(cands, rng))
    return d.result()


def sample_h1(hidden: Graph, seeds, T: int, rng):
    """Minimum observed degree first."""
    d = _Discovery(hidden, seeds)
    while len(d.queried) < T:
        cands = d.candidates()
        if not cands:
            break
        d.query(_pick_by_degree(d, cands, rng, np.min))
    return d.result()


def sample_h2(hidden: Graph, seeds, T: int, rng):
    """Minimum observed degree among the nodes discovered by the previous query.

    Before the first query the seeds' neighbourhood counts as the previous
    discovery.  When that pool is exhausted, fall back to any unqueried node.
    """
    d = _Discovery(hidden, seeds)
    pool = d.candidates()
    while len(d.queried) < T:
        cands = d.candidates()
        if not cands:
            break
        open_set = set(cands)
        eligible = [v for v in pool if v in open_set]
        u = _pick_by_degree(d, eligible, rng, np.min) if eligible else _pick_uniform(cands, rng)
        pool = d.query(u)
    return d.result()


SAMPLERS = {
    "change": sample_change,
    "snowball": sample_snowball,
    "recommend": sample_recommend,
    "random": sample_random_greedy,
    "h1": sample_h1,
    "h2": sample_h2,
}


QUERYLOG_COLUMNS = ["run_id", "t", "node_label", "observed_nodes"]


def write_querylog_csv(path, logs, hidden: Graph):
    """``logs`` maps run id to a list of :class:`Query`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(QUERYLOG_COLUMNS)
        for run_id, entries in logs.items():
            for q in entries:
                w.writerow([run_id, q.t, hidden.label(q.node), q.observed_nodes])


def read_querylog_csv(path, hidden: Graph) -> dict:
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["run_id"], []).append(
                Query(int(row["t"]), hidden.node_of(row["node_label"]), int(row["observed_nodes"]))
            )
    return out
