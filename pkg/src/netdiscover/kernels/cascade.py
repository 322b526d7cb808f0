"""Live-edge cascade kernels.

A cascade realisation is a boolean ``live`` row with one entry per undirected
edge; the activated set is everything reachable from the seeds over live edges.
On undirected graphs each edge is attempted at most once during an independent
cascade, so this coupling has exactly the cascade's distribution.
"""
import numpy as np

from .._jit import njit, use_numba


@njit(cache=True)
def spread_counts_numba(indptr, indices, edge_ids, seeds, live):
    sims = live.shape[0]
    n = len(indptr) - 1
    out = np.zeros(sims, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for r in range(sims):
        mark = r + 1
        tail = 0
        for s in seeds:
            if stamp[s] != mark:
                stamp[s] = mark
                queue[tail] = s
                tail += 1
        head = 0
        while head < tail:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if stamp[w] != mark and live[r, edge_ids[k]]:
                    stamp[w] = mark
                    queue[tail] = w
                    tail += 1
        out[r] = tail
    return out


@njit(cache=True)
def reach_masks_numba(indptr, indices, edge_ids, seeds, live):
    sims = live.shape[0]
    n = len(indptr) - 1
    reached = np.zeros((sims, n), dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for r in range(sims):
        tail = 0
        for s in seeds:
            if not reached[r, s]:
                reached[r, s] = True
                queue[tail] = s
                tail += 1
        head = 0
        while head < tail:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if not reached[r, w] and live[r, edge_ids[k]]:
                    reached[r, w] = True
                    queue[tail] = w
                    tail += 1
    return reached


@njit(cache=True)
def marginal_gains_numba(indptr, indices, edge_ids, live, covered, candidates):
    sims = live.shape[0]
    n = len(indptr) - 1
    gains = np.zeros(len(candidates), dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    mark = 0
    for ci in range(len(candidates)):
        c = candidates[ci]
        total = 0
        for r in range(sims):
            if covered[r, c]:
                continue
            mark += 1
            stamp[c] = mark
            queue[0] = c
            head, tail = 0, 1
            while head < tail:
                v = queue[head]
                head += 1
                for k in range(indptr[v], indptr[v + 1]):
                    w = indices[k]
                    if stamp[w] != mark and not covered[r, w] and live[r, edge_ids[k]]:
                        stamp[w] = mark
                        queue[tail] = w
                        tail += 1
            total += tail
        gains[ci] = total
    return gains


def _arc_sources(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def _propagate_numpy(indptr, indices, edge_ids, active, frontier, live):
    """Level-synchronous BFS over all simulations at once; mutates ``active``."""
    src = _arc_sources(indptr)
    dst = np.asarray(indices)
    arc_live = live[:, edge_ids]
    while frontier.any():
        rows, arcs = np.nonzero(frontier[:, src] & arc_live)
        newly = np.zeros_like(active)
        newly[rows, dst[arcs]] = True
        newly &= ~active
        active |= newly
        frontier = newly
    return active


def reach_masks_numpy(indptr, indices, edge_ids, seeds, live):
    sims = live.shape[0]
    active = np.zeros((sims, len(indptr) - 1), dtype=bool)
    active[:, np.asarray(seeds, dtype=np.int64)] = True
    return _propagate_numpy(indptr, indices, edge_ids, active, active.copy(), live)


def spread_counts_numpy(indptr, indices, edge_ids, seeds, live):
    return reach_masks_numpy(indptr, indices, edge_ids, seeds, live).sum(axis=1).astype(np.int64)


def marginal_gains_numpy(indptr, indices, edge_ids, live, covered, candidates):
    sims, n = covered.shape
    gains = np.zeros(len(candidates), dtype=np.int64)
    base = covered.sum()
    for ci, c in enumerate(candidates):
        frontier = np.zeros((sims, n), dtype=bool)
        frontier[:, c] = ~covered[:, c]
        active = covered | frontier
        active = _propagate_numpy(indptr, indices, edge_ids, active, frontier, live)
        gains[ci] = active.sum() - base
    return gains


def spread_counts(indptr, indices, edge_ids, seeds, live):
    seeds = np.asarray(seeds, dtype=np.int64)
    if use_numba():
        return spread_counts_numba(indptr, indices, edge_ids, seeds, live)
    return spread_counts_numpy(indptr, indices, edge_ids, seeds, live)


def reach_masks(indptr, indices, edge_ids, seeds, live):
    seeds = np.asarray(seeds, dtype=np.int64)
    if use_numba():
        return reach_masks_numba(indptr, indices, edge_ids, seeds, live)
    return reach_masks_numpy(indptr, indices, edge_ids, seeds, live)


def marginal_gains(indptr, indices, edge_ids, live, covered, candidates):
    candidates = np.asarray(candidates, dtype=np.int64)
    if use_numba():
        return marginal_gains_numba(indptr, indices, edge_ids, live, covered, candidates)
    return marginal_gains_numpy(indptr, indices, edge_ids, live, covered, candidates)
