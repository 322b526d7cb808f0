"""Time the numba kernels against their numpy fallbacks on one random graph.

    python benchmarks/bench_kernels.py [--nodes 300] [--p-edge 0.03] [--repeats 3]

The first numba call per kernel pays JIT compilation; it is run once as a
warm-up and excluded from the timings.
"""
import argparse
import time

import numpy as np

from netdiscover import _jit
from netdiscover.deepwalk import WalkConfig, embed_graph, generate_walks
from netdiscover.graph import Graph, betweenness_centrality
from netdiscover.influence import CascadeConfig, estimate_influence, greedy_select


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(iu.size) < p
    return Graph(n, np.stack([iu[hit], ju[hit]], axis=1))


def workloads(g):
    cascade = CascadeConfig(p=0.1, num_sims=500)
    walk = WalkConfig(walks_per_node=10, walk_length=40, window=5, dim=32, epochs=1)
    seeds = list(range(5))
    return {
        "cascade (500 sims)": lambda rng: estimate_influence(g, seeds, cascade, rng),
        "greedy k=5": lambda rng: greedy_select(g, 5, CascadeConfig(p=0.1, num_sims=100), rng),
        "random walks": lambda rng: generate_walks(g, walk, rng),
        "deepwalk embed": lambda rng: embed_graph(g, walk, rng),
        "betweenness": lambda rng: betweenness_centrality(g),
    }


def best_time(fn, repeats):
    times = []
    for r in range(repeats):
        rng = np.random.default_rng(r)
        t0 = time.perf_counter()
        fn(rng)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=300)
    ap.add_argument("--p-edge", type=float, default=0.03)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    g = random_graph(args.nodes, args.p_edge, 0)
    print(f"graph: {g.node_count} nodes, {g.num_edges} edges; best of {args.repeats}")
    backends = ["numba", "numpy"] if _jit.HAS_NUMBA else ["numpy"]
    results = {}
    for name in backends:
        _jit.set_backend(name)
        for label, fn in workloads(g).items():
            fn(np.random.default_rng(99))
            results[label, name] = best_time(fn, args.repeats)
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for label in workloads(g):
        row = f"{label:<20}" + "".join(f"{results[label, b]:>11.4f}s" for b in backends)
        if len(backends) == 2:
            row += f"{results[label, 'numpy'] / results[label, 'numba']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
