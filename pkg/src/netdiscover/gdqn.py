"""Geometric-DQN: GCN layers, DiffPool graph embedding and a state-action Q head.

Forward passes run on padded batches of shape ``(B, n_max, ...)``.  Padding
rows carry zero features and zero (normalised) adjacency, so they never mix
into real nodes and contribute nothing to pooled outputs.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tape, Var, load_checkpoint, save_checkpoint
from .errors import DomainError, ShapeError

POOL_MODES = ("diffpool", "sum_pool")
FEATURE_MODES = ("deepwalk", "constant")


@dataclass(frozen=True)
class NetConfig:
    d_in: int = 32
    gcn_widths: tuple = (64, 64)
    clusters: tuple = (8, 1)
    graph_emb: int = 64
    head_widths: tuple = (128, 64)
    pooling: str = "diffpool"
    features: str = "deepwalk"

    def __post_init__(self):
        if self.pooling not in POOL_MODES:
            raise DomainError(f"pooling must be one of {POOL_MODES}")
        if self.features not in FEATURE_MODES:
            raise DomainError(f"features must be one of {FEATURE_MODES}")
        if not self.clusters or self.clusters[-1] != 1 or min(self.clusters) < 1:
            raise DomainError("cluster counts must be positive and end with a single cluster")
        if self.pooling == "sum_pool" and self.graph_emb != self.gcn_widths[-1]:
            raise DomainError("sum pooling needs graph_emb equal to the last GCN width")

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        d = dict(d)
        for key in ("gcn_widths", "clusters", "head_widths"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class StateRepr:
    features: np.ndarray
    adjacency: np.ndarray
    a_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.adjacency.shape[0]
        if self.features.shape[0] != n:
            raise ShapeError(f"features have {self.features.shape[0]} rows, adjacency has order {n}")
        self.a_norm = normalize_adjacency(self.adjacency)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise DomainError("adjacency must be symmetric")
    at = a + np.eye(a.shape[0])
    r = at.sum(axis=1) ** -0.5
    return at * r[:, None] * r[None, :]


def constant_features(n, d: int) -> np.ndarray:
    """Uninformative unit-norm rows, one per node (``n`` may be a Graph)."""
    if d < 1:
        raise DomainError("d must be positive")
    n = n if isinstance(n, (int, np.integer)) else n.node_count
    return np.full((n, d), 1.0 / np.sqrt(d))


# -- parameters ------------------------------------------------------------------
def _glorot(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def init_params(cfg: NetConfig, rng) -> dict:
    params = {}
    width = cfg.d_in
    for i, w in enumerate(cfg.gcn_widths):
        params[f"gcn.{i}"] = _glorot(rng, width, w)
        width = w
    if cfg.pooling == "diffpool":
        for lvl, c in enumerate(cfg.clusters):
            out = cfg.graph_emb if lvl == len(cfg.clusters) - 1 else width
            params[f"pool.{lvl}.assign"] = _glorot(rng, width, c)
            params[f"pool.{lvl}.embed"] = _glorot(rng, width, out)
            width = out
    width = cfg.graph_emb + cfg.d_in
    for i, w in enumerate(cfg.head_widths + (1,)):
        params[f"head.{i}.w"] = _glorot(rng, width, w)
        params[f"head.{i}.b"] = np.zeros((1, w))
        width = w
    return params


def copy_params(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def save_params(path, params: dict, cfg: NetConfig):
    meta = asdict(cfg)
    meta["architecture"] = "geometric-dqn"
    save_checkpoint(path, params, meta)


def load_params(path) -> tuple[dict, NetConfig]:
    params, meta = load_checkpoint(path)
    meta.pop("architecture", None)
    cfg = NetConfig.from_dict(meta)
    expected = init_params(cfg, np.random.default_rng(0))
    for k, v in expected.items():
        if k not in params or params[k].shape != v.shape:
            raise ShapeError(f"checkpoint tensor {k!r} missing or mis-shaped")
    return params, cfg


# -- batching --------------------------------------------------------------------
@dataclass
class StateBatch:
    features: np.ndarray
    adjacency: np.ndarray
    a_norm: np.ndarray

    @classmethod
    def stack(cls, states) -> "StateBatch":
        b = len(states)
        n = max(1, max(s.n for s in states))
        d = states[0].features.shape[1]
        f = np.zeros((b, n, d))
        a = np.zeros((b, n, n))
        an = np.zeros((b, n, n))
        for i, s in enumerate(states):
            f[i, :s.n] = s.features
            a[i, :s.n, :s.n] = s.adjacency
            an[i, :s.n, :s.n] = s.a_norm
        return cls(f, a, an)


# -- forward pieces --------------------------------------------------------------
def gcn_layer(tape: Tape, f: Var, a_norm: Var, w: Var, activate: bool = True) -> Var:
    out = tape.matmul(a_norm, tape.matmul(f, w))
    return tape.relu(out) if activate else out


def diffpool_level(tape: Tape, f: Var, adj: Var, a_norm: Var, w_assign: Var, w_embed: Var):
    """One coarsening step; returns ``(pooled features, pooled adjacency, assignment)``."""
    s = tape.row_softmax(gcn_layer(tape, f, a_norm, w_assign, activate=False))
    z = gcn_layer(tape, f, a_norm, w_embed)
    st = tape.transpose(s)
    return tape.matmul(st, z), tape.matmul(tape.matmul(st, adj), s), s


def graph_embedding_var(tape: Tape, pv: dict, batch: StateBatch, mode: str) -> Var:
    """Per-graph embedding of shape ``(B, 1, width)``."""
    if mode not in POOL_MODES:
        raise DomainError(f"unknown pooling mode {mode!r}")
    a_norm = tape.const(batch.a_norm)
    h = tape.const(batch.features)
    i = 0
    while f"gcn.{i}" in pv:
        h = gcn_layer(tape, h, a_norm, pv[f"gcn.{i}"])
        i += 1
    if mode == "sum_pool":
        return tape.reduce_sum(h, axis=-2)
    if "pool.0.assign" not in pv:
        raise DomainError("parameters carry no pooling weights")
    adj = tape.const(batch.adjacency)
    lvl = 0
    while f"pool.{lvl}.assign" in pv:
        h, adj, _ = diffpool_level(tape, h, adj, a_norm, pv[f"pool.{lvl}.assign"], pv[f"pool.{lvl}.embed"])
        lvl += 1
        if f"pool.{lvl}.assign" in pv:
            a_norm = tape.gcn_normalize(adj)
    return h


def q_head(tape: Tape, pv: dict, x: Var) -> Var:
    i = 0
    while f"head.{i}.w" in pv:
        x = tape.add(tape.matmul(x, pv[f"head.{i}.w"]), pv[f"head.{i}.b"])
        i += 1
        if f"head.{i}.w" in pv:
            x = tape.relu(x)
    return x


def q_for_candidates(tape: Tape, pv: dict, g_emb: Var, actions: np.ndarray) -> Var:
    """Q for every candidate row of one state; ``g_emb`` is ``(1, width)``."""
    k = actions.shape[0]
    tiled = tape.matmul(tape.const(np.ones((k, 1))), g_emb)
    return q_head(tape, pv, tape.concat_cols(tiled, tape.const(actions)))


def param_vars(tape: Tape, params: dict) -> dict:
    return {k: tape.param(v, k) for k, v in params.items()}


def _check_actions(params, actions):
    d_in = params["head.0.w"].shape[0] - _emb_width(params)
    if actions.ndim != 2 or actions.shape[1] != d_in:
        raise ShapeError(f"candidate embeddings must have width {d_in}, got shape {actions.shape}")


def _emb_width(params):
    lvl = 0
    while f"pool.{lvl + 1}.embed" in params:
        lvl += 1
    if f"pool.{lvl}.embed" in params:
        return params[f"pool.{lvl}.embed"].shape[1]
    i = 0
    while f"gcn.{i + 1}" in params:
        i += 1
    return params[f"gcn.{i}"].shape[1]


# -- public no-grad evaluation -------------------------------------------------------
def graph_embedding(state: StateRepr, params: dict, mode: str = "diffpool") -> np.ndarray:
    tape = Tape(record=False)
    out = graph_embedding_var(tape, param_vars(tape, params), StateBatch.stack([state]), mode)
    return out.value[0, 0]


def q_values(state: StateRepr, actions: np.ndarray, params: dict, mode: str = "diffpool") -> np.ndarray:
    actions = np.asarray(actions, dtype=np.float64)
    _check_actions(params, actions)
    tape = Tape(record=False)
    pv = param_vars(tape, params)
    g = graph_embedding_var(tape, pv, StateBatch.stack([state]), mode)
    return q_for_candidates(tape, pv, tape.reshape(g, (1, -1)), actions).value[:, 0]
