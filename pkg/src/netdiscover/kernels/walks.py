import numpy as np

from .._jit import njit, use_numba


@njit(cache=True)
def random_walks_numba(indptr, indices, starts, uniforms):
    nw = len(starts)
    length = uniforms.shape[1] + 1
    walks = np.full((nw, length), -1, dtype=np.int64)
    for w in range(nw):
        cur = starts[w]
        walks[w, 0] = cur
        for step in range(1, length):
            deg = indptr[cur + 1] - indptr[cur]
            if deg == 0:
                break
            j = int(uniforms[w, step - 1] * deg)
            if j >= deg:
                j = deg - 1
            cur = indices[indptr[cur] + j]
            walks[w, step] = cur
    return walks


def random_walks_numpy(indptr, indices, starts, uniforms):
    nw = len(starts)
    length = uniforms.shape[1] + 1
    walks = np.full((nw, length), -1, dtype=np.int64)
    cur = np.asarray(starts, dtype=np.int64).copy()
    walks[:, 0] = cur
    if len(indices) == 0:
        return walks
    deg = np.diff(indptr)
    alive = deg[cur] > 0
    for step in range(1, length):
        d = deg[cur]
        j = np.minimum((uniforms[:, step - 1] * d).astype(np.int64), np.maximum(d - 1, 0))
        nxt = indices[np.minimum(indptr[cur] + j, len(indices) - 1)]
        cur = np.where(alive, nxt, cur)
        walks[alive, step] = cur[alive]
    return walks


def random_walks(indptr, indices, starts, uniforms):
    starts = np.asarray(starts, dtype=np.int64)
    if use_numba():
        return random_walks_numba(indptr, indices, starts, uniforms)
    return random_walks_numpy(indptr, indices, starts, uniforms)
