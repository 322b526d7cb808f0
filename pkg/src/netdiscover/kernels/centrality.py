import numpy as np

from .._jit import njit, use_numba


@njit(cache=True)
def betweenness_numba(indptr, indices):
    n = len(indptr) - 1
    bc = np.zeros(n)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n)
    delta = np.empty(n)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for i in range(tail - 1, -1, -1):
            w = queue[i]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc / 2.0


def betweenness_numpy(indptr, indices):
    n = len(indptr) - 1
    src = np.repeat(np.arange(n), np.diff(indptr))
    dst = np.asarray(indices)
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        level = 0
        while True:
            out = dist[src] == level
            fresh = out & (dist[dst] < 0)
            if not fresh.any():
                break
            dist[dst[fresh]] = level + 1
            tree = out & (dist[dst] == level + 1)
            np.add.at(sigma, dst[tree], sigma[src[tree]])
            level += 1
        delta = np.zeros(n)
        for lev in range(level, 0, -1):
            arcs = (dist[dst] == lev) & (dist[src] == lev - 1)
            v, w = src[arcs], dst[arcs]
            np.add.at(delta, v, sigma[v] / sigma[w] * (1.0 + delta[w]))
        delta[s] = 0.0
        bc += delta
    return bc / 2.0


def betweenness_kernel(indptr, indices):
    if use_numba():
        return betweenness_numba(indptr, indices)
    return betweenness_numpy(indptr, indices)
