"""DeepWalk node embeddings: uniform random walks + skip-gram with negative sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .graph import Graph
from .kernels.skipgram import sgns_train
from .kernels.walks import random_walks

UNIGRAM_POWER = 0.75


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    window: int = 5
    dim: int = 32
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    warm_start: bool = False

    def __post_init__(self):
        ints = (self.walks_per_node, self.walk_length, self.window, self.dim, self.negatives)
        if min(ints) < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise DomainError("walk parameters must be positive")
        if self.window >= self.walk_length:
            raise DomainError("window must be shorter than walk_length")


@dataclass
class EmbeddingTable:
    vectors: np.ndarray
    context: np.ndarray | None = None
    labels: tuple | None = None

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def to_text(self) -> str:
        n, d = self.vectors.shape
        lines = [f"{n} {d}"]
        for i, row in enumerate(self.vectors):
            label = self.labels[i] if self.labels is not None else str(i)
            lines.append(" ".join([label] + [repr(float(x)) for x in row]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EmbeddingTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        try:
            n, d = (int(x) for x in lines[0].split())
        except (IndexError, ValueError):
            raise ParseError("header must be 'n d'", line=1) from None
        labels, rows = [], []
        for i, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != d + 1:
                raise ParseError(f"expected label and {d} values", line=i)
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        if len(rows) != n:
            raise ParseError(f"header announces {n} rows, found {len(rows)}")
        return cls(np.array(rows, dtype=np.float64).reshape(n, d), labels=tuple(labels))


def generate_walks(g: Graph, cfg: WalkConfig, rng) -> np.ndarray:
    """``walks_per_node`` passes over a shuffled node order.

    Returns an int array of shape ``(walks_per_node * n, walk_length)``; walks
    from isolated nodes stop after the start node and are padded with -1.
    """
    n = g.node_count
    starts = np.concatenate([rng.permutation(n) for _ in range(cfg.walks_per_node)]) if n else np.empty(0, np.int64)
    uniforms = rng.random((len(starts), cfg.walk_length - 1))
    return random_walks(g.indptr, g.indices, starts, uniforms)


def unigram_table(walks: np.ndarray, n: int, size: int | None = None) -> np.ndarray:
    counts = np.bincount(walks[walks >= 0], minlength=n).astype(np.float64)
    weights = counts ** UNIGRAM_POWER
    if weights.sum() == 0:
        weights[:] = 1.0
    size = size or max(1000, 100 * n)
    cdf = np.cumsum(weights / weights.sum())
    return np.minimum(np.searchsorted(cdf, (np.arange(size) + 0.5) / size), n - 1)


def train_skipgram(walks: np.ndarray, cfg: WalkConfig, rng, n: int | None = None, init=None) -> EmbeddingTable:
    walks = np.asarray(walks, dtype=np.int64)
    if walks.size == 0:
        raise DomainError("empty walk corpus")
    if n is None:
        n = int(walks.max()) + 1
    d = cfg.dim
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(n, d))
    w_out = np.zeros((n, d))
    if init is not None:
        rows, vecs, ctx = init
        w_in[rows] = vecs
        w_out[rows] = ctx
    if cfg.epochs > 0:
        lengths = (walks >= 0).sum(axis=1)
        table = unigram_table(walks, n)
        seed = int(rng.integers(1, 2**62))
        sgns_train(walks, lengths, w_in, w_out, table, cfg.window, cfg.negatives, cfg.epochs,
                   cfg.learning_rate, cfg.min_learning_rate, seed)
    return EmbeddingTable(w_in, w_out)


def embed_graph(g: Graph, cfg: WalkConfig, rng, warm: tuple | None = None) -> EmbeddingTable:
    """Fresh DeepWalk embedding of ``g``.

    ``warm`` may be ``(previous_graph, previous_table)``; nodes present in both
    (matched by hidden id) then start from their previous vectors.  Only used
    when ``cfg.warm_start`` is set.
    """
    walks = generate_walks(g, cfg, rng)
    init = None
    if cfg.warm_start and warm is not None:
        prev_g, prev_t = warm
        prev_ids = prev_g.hidden_ids()
        cur = {int(h): i for i, h in enumerate(g.hidden_ids())}
        pairs = [(cur[int(h)], j) for j, h in enumerate(prev_ids) if int(h) in cur]
        if pairs:
            rows, src = (np.array(x) for x in zip(*pairs))
            init = (rows, prev_t.vectors[src], prev_t.context[src])
    if g.node_count == 0:
        return EmbeddingTable(np.zeros((0, cfg.dim)), np.zeros((0, cfg.dim)), ())
    table = train_skipgram(walks, cfg, rng, n=g.node_count, init=init)
    table.labels = tuple(g.label(i) for i in range(g.node_count))
    return table
