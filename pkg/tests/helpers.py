"""Small graph builders shared by the tests."""
import numpy as np

from netdiscover.graph import Graph


def star(leaves: int) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def clique(n: int, offset: int = 0) -> list:
    return [(offset + i, offset + j) for i in range(n) for j in range(i + 1, n)]


def random_graph(rng, n: int, p: float) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))


def star_of_stars(hubs: int = 5, leaves: int = 0) -> Graph:
    """Hubs with their own leaves, every pair of hubs joined through a degree-2 bridge."""
    edges = []
    nxt = hubs
    for h in range(hubs):
        for _ in range(leaves):
            edges.append((h, nxt))
            nxt += 1
    for a in range(hubs):
        for b in range(a + 1, hubs):
            edges += [(a, nxt), (nxt, b)]
            nxt += 1
    return Graph(nxt, edges)
