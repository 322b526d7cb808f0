"""Deep Q-learning over discovery episodes, with prioritized replay and a target network."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .autodiff import AdamState, Tape, adam_step
from .deepwalk import WalkConfig, embed_graph
from .env import (
    BaselineCache,
    EnvConfig,
    action_set,
    finalize,
    precompute_baselines,
    reset,
    step,
)
from .errors import DomainError, StateError
from .gdqn import (
    NetConfig,
    StateBatch,
    StateRepr,
    constant_features,
    copy_params,
    graph_embedding_var,
    init_params,
    param_vars,
    q_head,
    q_values,
)
from .graph import Graph
from .samplers import Query

log = logging.getLogger(__name__)

PRIORITY_EPS = 1e-6


@dataclass(frozen=True)
class DQNConfig:
    episodes: int = 1000
    gamma: float = 1.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.5
    batch_size: int = 32
    buffer_capacity: int = 5000
    alpha: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    target_sync_interval: int = 100
    learn_start: int = 64
    learning_rate: float = 1e-3
    grad_clip: float = 10.0
    huber_delta: float = 1.0
    ablate_step_reward: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        if not (0.0 <= self.eps_end <= 1.0 and 0.0 <= self.eps_start <= 1.0):
            raise DomainError("epsilon must lie in [0, 1]")
        if min(self.batch_size, self.buffer_capacity, self.target_sync_interval) < 1 or self.episodes < 0:
            raise DomainError("batch size, capacity and sync interval must be positive")

    def epsilon(self, episode: int) -> float:
        horizon = max(1.0, self.eps_fraction * self.episodes)
        frac = min(1.0, episode / horizon)
        return self.eps_start + frac * (self.eps_end - self.eps_start)

    def beta(self, episode: int) -> float:
        frac = min(1.0, episode / max(1, self.episodes - 1))
        return self.beta_start + frac * (self.beta_end - self.beta_start)


@dataclass
class ReplayItem:
    state: StateRepr
    action_embedding: np.ndarray
    reward: float
    next_state: StateRepr | None
    next_action_embeddings: np.ndarray
    terminal: bool


class PrioritizedReplayBuffer:
    """Ring buffer sampled with probability proportional to ``priority ** alpha``."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise DomainError("capacity must be positive")
        self.capacity = capacity
        self.items: list = []
        self.priorities = np.zeros(capacity)
        self._next = 0

    def __len__(self):
        return len(self.items)

    def push(self, item: ReplayItem):
        prio = self.priorities[:len(self.items)].max() if self.items else 1.0
        if len(self.items) < self.capacity:
            self.items.append(item)
        else:
            self.items[self._next] = item
        self.priorities[self._next] = prio
        self._next = (self._next + 1) % self.capacity

    def probabilities(self, alpha: float) -> np.ndarray:
        p = self.priorities[:len(self.items)] ** alpha
        return p / p.sum()

    def sample(self, batch: int, alpha: float, beta: float, rng):
        n = len(self.items)
        if n < batch:
            raise StateError(f"buffer holds {n} items, fewer than batch size {batch}")
        probs = self.probabilities(alpha)
        idx = rng.choice(n, size=batch, p=probs)
        w = (n * probs[idx]) ** (-beta)
        return [self.items[i] for i in idx], idx, w / w.max()

    def update_priorities(self, indices, td_errors):
        self.priorities[np.asarray(indices)] = np.abs(td_errors) + PRIORITY_EPS


def buffer_push(buffer: PrioritizedReplayBuffer, item: ReplayItem):
    buffer.push(item)


def buffer_sample(buffer: PrioritizedReplayBuffer, batch: int, alpha: float, beta: float, rng):
    return buffer.sample(batch, alpha, beta, rng)


def select_action(q, candidates, eps: float, rng) -> int:
    """Epsilon-greedy; greedy ties go to the smallest node id."""
    if len(candidates) == 0:
        raise DomainError("no candidates to choose from")
    if rng.random() < eps:
        return int(candidates[rng.integers(len(candidates))])
    q = np.asarray(q)
    best = q.max()
    return int(min(c for c, x in zip(candidates, q) if x == best))


# -- learning step -----------------------------------------------------------------
def _target_values(items, target_params, gamma, mode) -> np.ndarray:
    y = np.array([it.reward for it in items], dtype=np.float64)
    live = [i for i, it in enumerate(items) if not it.terminal and len(it.next_action_embeddings)]
    if gamma == 0.0 or not live:
        return y
    tape = Tape(record=False)
    pv = param_vars(tape, target_params)
    g = graph_embedding_var(tape, pv, StateBatch.stack([items[i].next_state for i in live]), mode).value[:, 0, :]
    counts = [len(items[i].next_action_embeddings) for i in live]
    rows = np.concatenate([np.repeat(g[j:j + 1], c, axis=0) for j, c in enumerate(counts)])
    acts = np.concatenate([items[i].next_action_embeddings for i in live])
    q = q_head(tape, pv, tape.const(np.concatenate([rows, acts], axis=1))).value[:, 0]
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    y[live] += gamma * np.maximum.reduceat(q, starts)
    return y


def td_update(items, weights, params, target_params, gamma, mode="diffpool", delta=1.0):
    """Importance-weighted Huber TD loss; returns ``(loss, grads, td_errors)``."""
    y = _target_values(items, target_params, gamma, mode)
    tape = Tape()
    pv = param_vars(tape, params)
    b = len(items)
    g = graph_embedding_var(tape, pv, StateBatch.stack([it.state for it in items]), mode)
    g = tape.reshape(g, (b, -1))
    acts = tape.const(np.stack([it.action_embedding for it in items]))
    q = q_head(tape, pv, tape.concat_cols(g, acts))
    diff = tape.add(q, tape.const(-y[:, None]))
    per_item = tape.hadamard(tape.huber(diff, delta), tape.const(np.asarray(weights, dtype=np.float64)[:, None]))
    loss = tape.scale(tape.reduce_sum(per_item), 1.0 / b)
    grads = tape.backward(loss)
    return float(loss.value.item()), grads, diff.value[:, 0].copy()


def _clip(grads: dict, max_norm: float):
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        for g in grads.values():
            g *= max_norm / total
    return total


# -- agent -------------------------------------------------------------------------
class Agent:
    """Parameters plus the recipe turning a discovered graph into network inputs."""

    def __init__(self, params: dict, net_cfg: NetConfig, walk_cfg: WalkConfig):
        self.params = params
        self.net_cfg = net_cfg
        self.walk_cfg = walk_cfg

    def represent(self, observed: Graph, rng, warm=None):
        """``(StateRepr, per-node embedding rows, table)`` for the current discovered graph."""
        if self.net_cfg.features == "constant":
            phi = constant_features(observed.node_count, self.net_cfg.d_in)
            table = None
        else:
            table = embed_graph(observed, self.walk_cfg, rng, warm=warm)
            phi = table.vectors
        return StateRepr(phi, observed.adjacency_matrix()), phi, table

    def q(self, state: StateRepr, rows: np.ndarray) -> np.ndarray:
        return q_values(state, rows, self.params, self.net_cfg.pooling)


def _rows(observed: Graph, phi: np.ndarray, nodes) -> np.ndarray:
    if not nodes:
        return np.zeros((0, phi.shape[1]))
    return phi[[observed.local(v) for v in nodes]]


# -- graph sources -------------------------------------------------------------------
class UniformSource:
    """Uniformly random named training graph with its baseline cache."""

    def __init__(self, graphs, baselines: dict):
        self.graphs = list(graphs)
        self.baselines = baselines

    def draw(self, rng):
        name, g = self.graphs[rng.integers(len(self.graphs))]
        return name, g, self.baselines[name]


class CurveRecord(NamedTuple):
    episode: int
    graph: str
    scaled_reward: float
    step_reward_sum: float
    influence: float


CURVE_COLUMNS = list(CurveRecord._fields)


def write_curve_csv(path, curve, variant: str | None = None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if variant is not None:
            fh.write(f"# variant: {variant}\n")
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in curve:
            w.writerow([r.episode, r.graph, repr(r.scaled_reward), repr(r.step_reward_sum), repr(r.influence)])


def read_curve_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [
        CurveRecord(int(r["episode"]), r["graph"], float(r["scaled_reward"]), float(r["step_reward_sum"]),
                    float(r["influence"]))
        for r in csv.DictReader(lines)
    ]


# -- training loop -------------------------------------------------------------------
def ensure_baselines(graphs, env_cfg: EnvConfig, baselines: dict | None, rng, change_runs: int = 30) -> dict:
    baselines = dict(baselines or {})
    for name, g in graphs:
        if name not in baselines:
            baselines[name] = precompute_baselines(g, env_cfg, change_runs, rng)
    return baselines


class Trainer:
    def __init__(self, env_cfg: EnvConfig, dqn_cfg: DQNConfig, walk_cfg: WalkConfig, net_cfg: NetConfig, rng):
        self.env_cfg = env_cfg
        self.cfg = dqn_cfg
        self.rng = rng
        self.params = init_params(net_cfg, rng)
        self.target = copy_params(self.params)
        self.agent = Agent(self.params, net_cfg, walk_cfg)
        self.buffer = PrioritizedReplayBuffer(dqn_cfg.buffer_capacity)
        self.opt = AdamState()
        self.global_step = 0
        self.losses: list = []
        self.curve: list = []
        self.transitions: list = []  # (episode, reward, terminal) for audit

    def learn(self, episode: int):
        cfg = self.cfg
        if len(self.buffer) < max(cfg.learn_start, cfg.batch_size):
            return
        items, idx, w = self.buffer.sample(cfg.batch_size, cfg.alpha, cfg.beta(episode), self.rng)
        loss, grads, td = td_update(items, w, self.params, self.target, cfg.gamma, self.agent.net_cfg.pooling,
                                    cfg.huber_delta)
        _clip(grads, cfg.grad_clip)
        adam_step(self.params, grads, self.opt, lr=cfg.learning_rate)
        self.buffer.update_priorities(idx, td)
        self.losses.append(loss)

    def sync_target(self):
        for k, v in self.params.items():
            self.target[k][...] = v

    def run_episode(self, episode: int, name: str, hidden: Graph, cache: BaselineCache) -> CurveRecord:
        cfg, env_cfg, rng, agent = self.cfg, self.env_cfg, self.rng, self.agent
        eps = cfg.epsilon(episode)
        s = reset(hidden, env_cfg, rng)
        state, phi, table = agent.represent(s.observed, rng)
        cands = action_set(s)
        step_sum = 0.0
        influence = rs = None
        for t in range(env_cfg.T):
            if not cands:
                break
            rows = _rows(s.observed, phi, cands)
            if rng.random() < eps:
                v = int(cands[rng.integers(len(cands))])
            else:
                v = select_action(agent.q(state, rows), cands, 0.0, rng)
            s_next, rp = step(s, v)
            step_sum += rp
            next_cands = action_set(s_next)
            terminal = t == env_cfg.T - 1 or not next_cands
            if terminal:
                influence, rs = finalize(s_next, cache, env_cfg, rng)
                reward, next_state, next_phi, next_table = rs, None, None, None
                next_rows = np.zeros((0, phi.shape[1]))
            else:
                reward = 0.0 if cfg.ablate_step_reward else rp
                next_state, next_phi, next_table = agent.represent(s_next.observed, rng, warm=(s.observed, table))
                next_rows = _rows(s_next.observed, next_phi, next_cands)
            self.buffer.push(ReplayItem(state, rows[cands.index(v)].copy(), reward, next_state, next_rows, terminal))
            self.transitions.append((episode, reward, terminal))
            self.learn(episode)
            self.global_step += 1
            if self.global_step % cfg.target_sync_interval == 0:
                self.sync_target()
            if terminal:
                break
            s, state, phi, table, cands = s_next, next_state, next_phi, next_table, next_cands
        if influence is None:
            influence, rs = finalize(s, cache, env_cfg, rng)
        return CurveRecord(episode, name, rs, step_sum, influence)

    def train(self, source, episodes: int | None = None, callback=None):
        episodes = self.cfg.episodes if episodes is None else episodes
        for ep in range(episodes):
            name, hidden, cache = source.draw(self.rng)
            rec = self.run_episode(ep, name, hidden, cache)
            self.curve.append(rec)
            if callback is not None:
                callback(rec)
        return self.params, self.curve


def train(graphs, synth, env_cfg: EnvConfig, dqn_cfg: DQNConfig, walk_cfg: WalkConfig, rng,
          net_cfg: NetConfig | None = None, baselines: dict | None = None, change_runs: int = 30, callback=None):
    """Train a Geometric-DQN; ``graphs`` is a list of ``(name, Graph)``.

    ``synth`` is an optional graph source (anything with ``draw(rng)``) that
    replaces uniform sampling over ``graphs``.
    """
    if not graphs and synth is None:
        raise DomainError("need at least one training graph")
    net_cfg = net_cfg or NetConfig(d_in=walk_cfg.dim)
    if net_cfg.features == "deepwalk" and net_cfg.d_in != walk_cfg.dim:
        raise DomainError("network input width must equal the DeepWalk dimension")
    baselines = ensure_baselines(graphs, env_cfg, baselines, rng, change_runs)
    source = synth if synth is not None else UniformSource(graphs, baselines)
    trainer = Trainer(env_cfg, dqn_cfg, walk_cfg, net_cfg, rng)
    return trainer.train(source, callback=callback)


def deploy(params: dict, hidden: Graph, env_cfg: EnvConfig, walk_cfg: WalkConfig, rng,
           net_cfg: NetConfig | None = None, seeds=None):
    """Run the frozen greedy policy; returns ``(discovered, query_log, activation_seeds, influence)``."""
    from .influence import estimate_influence, greedy_select

    net_cfg = net_cfg or NetConfig(d_in=walk_cfg.dim)
    agent = Agent(params, net_cfg, walk_cfg)
    s = reset(hidden, env_cfg, rng, seeds=seeds)
    log_: list = []
    prev = None
    for _ in range(env_cfg.T):
        cands = action_set(s)
        if not cands:
            break
        state, phi, table = agent.represent(s.observed, rng, warm=prev)
        prev = (s.observed, table) if table is not None else None
        v = select_action(agent.q(state, _rows(s.observed, phi, cands)), cands, 0.0, rng)
        s, _ = step(s, v)
        log_.append(Query(len(log_), v, s.observed.node_count))
    local = greedy_select(s.observed, env_cfg.activate_budget, env_cfg.cascade, rng)
    chosen = tuple(int(x) for x in s.observed.hidden_ids()[list(local)])
    influence = estimate_influence(hidden, chosen, env_cfg.cascade, rng)
    return s.observed, log_, chosen, influence
