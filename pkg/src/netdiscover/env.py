"""Network-discovery episodes: state, legal queries, step and terminal rewards."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, StateError
from .graph import Graph, initial_observation, reveal_neighbors
from .influence import CascadeConfig, estimate_influence, greedy_select

DEGENERATE_GAP = 1e-9


@dataclass(frozen=True)
class EnvConfig:
    T: int = 5
    num_seeds: int = 5
    activate_budget: int = 10
    cascade: CascadeConfig = field(default_factory=CascadeConfig)
    clip_reward: bool = False

    def __post_init__(self):
        if self.T < 1 or self.num_seeds < 1 or self.activate_budget < 1:
            raise DomainError("T, num_seeds and activate_budget must all be >= 1")


@dataclass(frozen=True)
class EnvState:
    hidden: Graph
    observed: Graph
    seeds: tuple
    queried: tuple = ()
    budget: int = 5

    @property
    def t(self) -> int:
        return len(self.queried)


@dataclass(frozen=True)
class BaselineCache:
    change_value: float
    opt_value: float
    change_runs: int = 0
    oracle_sims: int = 0
    rng_seed: int | None = None


def evaluate_discovery(hidden: Graph, observed: Graph, cfg: EnvConfig, rng) -> float:
    """Influence on the hidden graph of the greedy seeds picked from ``observed``."""
    local = greedy_select(observed, cfg.activate_budget, cfg.cascade, rng)
    chosen = observed.hidden_ids()[list(local)]
    return estimate_influence(hidden, chosen, cfg.cascade, rng)


def sample_seeds(hidden: Graph, cfg: EnvConfig, rng) -> tuple:
    if hidden.node_count < cfg.num_seeds:
        raise DomainError(f"graph has {hidden.node_count} nodes, fewer than num_seeds={cfg.num_seeds}")
    return tuple(sorted(int(x) for x in rng.choice(hidden.node_count, size=cfg.num_seeds, replace=False)))


def precompute_baselines(hidden: Graph, cfg: EnvConfig, change_runs: int, rng, rng_seed=None) -> BaselineCache:
    """Mean CHANGE influence over ``change_runs`` episodes and greedy-on-full-graph OPT."""
    from .samplers import sample_change

    if change_runs < 1:
        raise DomainError("change_runs must be positive")
    if hidden.node_count < cfg.num_seeds:
        raise DomainError(f"graph has {hidden.node_count} nodes, fewer than num_seeds={cfg.num_seeds}")
    values = []
    for _ in range(change_runs):
        seeds = sample_seeds(hidden, cfg, rng)
        discovered, _ = sample_change(hidden, seeds, cfg.T, rng)
        values.append(evaluate_discovery(hidden, discovered, cfg, rng))
    opt_seeds = greedy_select(hidden, cfg.activate_budget, cfg.cascade, rng)
    opt = estimate_influence(hidden, opt_seeds, cfg.cascade, rng)
    return BaselineCache(float(np.mean(values)), opt, change_runs, cfg.cascade.num_sims, rng_seed)


def reset(hidden: Graph, cfg: EnvConfig, rng, seeds=None) -> EnvState:
    if seeds is None:
        seeds = sample_seeds(hidden, cfg, rng)
    else:
        seeds = tuple(sorted(set(int(s) for s in seeds)))
    return EnvState(hidden, initial_observation(hidden, seeds), seeds, (), cfg.T)


def action_set(s: EnvState) -> list:
    """Queryable hidden ids in ascending order: observed, not a seed, not yet queried."""
    blocked = set(s.seeds) | set(s.queried)
    return [int(v) for v in s.observed.hidden_ids() if int(v) not in blocked]


def is_done(s: EnvState) -> bool:
    return s.t >= s.budget or not action_set(s)


def step(s: EnvState, u: int) -> tuple[EnvState, float]:
    if s.t >= s.budget:
        raise StateError("query budget exhausted")
    u = int(u)
    if u in s.seeds or u in s.queried or not s.observed.contains(u):
        raise DomainError(f"node {u} is not a legal query")
    observed = reveal_neighbors(s.hidden, s.observed, u)
    reward = (observed.node_count - s.observed.node_count) / s.hidden.node_count
    return replace(s, observed=observed, queried=s.queried + (u,)), reward


def scaled_reward(influence: float, change: float, opt: float, clip: bool = False) -> float:
    gap = opt - change
    if gap < DEGENERATE_GAP:
        return 0.0
    r = (influence - change) / gap
    return min(max(r, 0.0), 1.0) if clip else r


def finalize(s: EnvState, cache: BaselineCache, cfg: EnvConfig, rng) -> tuple[float, float]:
    if not is_done(s):
        raise StateError("episode not finished")
    influence = evaluate_discovery(s.hidden, s.observed, cfg, rng)
    return influence, scaled_reward(influence, cache.change_value, cache.opt_value, cfg.clip_reward)


# -- persistence ----------------------------------------------------------------
BASELINE_COLUMNS = ["graph_name", "change_value", "opt_value", "change_runs", "oracle_sims", "rng_seed"]


def write_baselines_csv(path, caches: dict):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BASELINE_COLUMNS)
        for name, c in caches.items():
            w.writerow([name, repr(c.change_value), repr(c.opt_value), c.change_runs, c.oracle_sims,
                        "" if c.rng_seed is None else c.rng_seed])


def read_baselines_csv(path) -> dict:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            seed = row["rng_seed"]
            out[row["graph_name"]] = BaselineCache(
                float(row["change_value"]), float(row["opt_value"]), int(row["change_runs"]),
                int(row["oracle_sims"]), int(seed) if seed != "" else None,
            )
    return out
