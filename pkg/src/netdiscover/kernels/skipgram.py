"""Skip-gram with negative sampling, word2vec-style sequential SGD.

Negatives come from a 64-bit linear congruential stream (the word2vec
generator) so both backends consume identical draws.
"""
import math

import numpy as np

from .._jit import njit, use_numba

LCG_MUL = 25214903917
LCG_ADD = 11
_MASK64 = (1 << 64) - 1


@njit(cache=True)
def _sigmoid(x):
    if x > 30.0:
        x = 30.0
    elif x < -30.0:
        x = -30.0
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True)
def sgns_numba(walks, lengths, w_in, w_out, table, window, negatives, epochs, lr0, lr_min, seed):
    dim = w_in.shape[1]
    neu1e = np.empty(dim)
    state = np.uint64(seed)
    mul = np.uint64(LCG_MUL)
    add = np.uint64(LCG_ADD)
    shift = np.uint64(16)
    tsize = np.uint64(len(table))
    total = 0
    for i in range(len(lengths)):
        total += lengths[i]
    total *= epochs
    processed = 0
    for _ in range(epochs):
        for wi in range(walks.shape[0]):
            length = lengths[wi]
            for i in range(length):
                lr = lr0 - (lr0 - lr_min) * processed / max(total, 1)
                processed += 1
                center = walks[wi, i]
                lo = max(0, i - window)
                hi = min(length, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    ctx = walks[wi, j]
                    neu1e[:] = 0.0
                    for s in range(negatives + 1):
                        if s == 0:
                            target = ctx
                            label = 1.0
                        else:
                            state = state * mul + add
                            target = table[(state >> shift) % tsize]
                            if target == ctx:
                                continue
                            label = 0.0
                        f = 0.0
                        for k in range(dim):
                            f += w_in[center, k] * w_out[target, k]
                        g = (label - _sigmoid(f)) * lr
                        for k in range(dim):
                            neu1e[k] += g * w_out[target, k]
                        for k in range(dim):
                            w_out[target, k] += g * w_in[center, k]
                    for k in range(dim):
                        w_in[center, k] += neu1e[k]
    return w_in, w_out


def sgns_numpy(walks, lengths, w_in, w_out, table, window, negatives, epochs, lr0, lr_min, seed):
    state = int(seed) & _MASK64
    tsize = len(table)
    total = max(int(np.sum(lengths)) * epochs, 1)
    processed = 0
    for _ in range(epochs):
        for wi in range(walks.shape[0]):
            length = int(lengths[wi])
            walk = walks[wi]
            for i in range(length):
                lr = lr0 - (lr0 - lr_min) * processed / total
                processed += 1
                center = walk[i]
                u = w_in[center]
                for j in range(max(0, i - window), min(length, i + window + 1)):
                    if j == i:
                        continue
                    ctx = walk[j]
                    neu1e = np.zeros_like(u)
                    for s in range(negatives + 1):
                        if s == 0:
                            target, label = ctx, 1.0
                        else:
                            state = (state * LCG_MUL + LCG_ADD) & _MASK64
                            target = table[(state >> 16) % tsize]
                            if target == ctx:
                                continue
                            label = 0.0
                        v = w_out[target]
                        f = min(max(float(np.dot(u, v)), -30.0), 30.0)
                        g = (label - 1.0 / (1.0 + math.exp(-f))) * lr
                        neu1e += g * v
                        v += g * u
                    u += neu1e
    return w_in, w_out


def sgns_train(walks, lengths, w_in, w_out, table, window, negatives, epochs, lr0, lr_min, seed):
    """Train ``w_in``/``w_out`` in place and return them."""
    args = (
        np.ascontiguousarray(walks, dtype=np.int64),
        np.asarray(lengths, dtype=np.int64),
        w_in,
        w_out,
        np.asarray(table, dtype=np.int64),
        int(window),
        int(negatives),
        int(epochs),
        float(lr0),
        float(lr_min),
        int(seed),
    )
    if use_numba():
        return sgns_numba(*args)
    return sgns_numpy(*args)
