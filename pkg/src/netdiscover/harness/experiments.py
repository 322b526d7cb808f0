"""Evaluation, ablation and query-centrality experiments over configured graphs."""
from __future__ import annotations

import csv
import dataclasses
import logging
import os
from typing import NamedTuple

import numpy as np

from ..env import EnvConfig, evaluate_discovery, precompute_baselines, read_baselines_csv, sample_seeds
from ..errors import DomainError
from ..gdqn import load_params
from ..graph import Graph, betweenness_centrality, degree_centrality, read_edge_list
from ..influence import CascadeConfig
from ..samplers import SAMPLERS
from ..seeding import derive_rng
from ..synthgen import GraphSource, fit_model
from ..training import DQNConfig, Trainer, deploy, write_curve_csv
from .config import ExperimentConfig

log = logging.getLogger(__name__)

METHODS = ("gdqn",) + tuple(SAMPLERS)
ABLATION_VARIANTS = ("full", "no_step_reward", "sum_pool", "constant_features")


class UndefinedMetricError(DomainError):
    pass


def improve_percent(influence: float, change: float, opt: float) -> float:
    """Share of the CHANGE-to-OPT gap closed, in percent."""
    if opt == change:
        raise UndefinedMetricError("improvement is undefined when OPT equals CHANGE")
    return 100.0 * (influence - change) / (opt - change)


class EvalRecord(NamedTuple):
    network: str
    method: str
    influence_mean: float
    influence_std: float
    improve_percent: float


EVAL_COLUMNS = list(EvalRecord._fields)


def write_eval_csv(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EVAL_COLUMNS)
        for r in records:
            w.writerow([r.network, r.method, repr(r.influence_mean), repr(r.influence_std), repr(r.improve_percent)])


def read_eval_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            EvalRecord(r["network"], r["method"], float(r["influence_mean"]), float(r["influence_std"]),
                       float(r["improve_percent"]))
            for r in csv.DictReader(fh)
        ]


# -- loading -----------------------------------------------------------------------
def load_graphs(entries) -> list:
    return [(name, read_edge_list(path)) for name, path in entries]


def baselines_path(cfg: ExperimentConfig) -> str:
    return os.path.join(cfg.output_dir, "baselines.csv")


def baselines_for(cfg: ExperimentConfig, graphs, cache: dict | None = None) -> dict:
    """Cached baselines for ``graphs``; missing entries are computed from per-graph seeded streams."""
    cache = dict(cache or {})
    path = baselines_path(cfg)
    if os.path.exists(path):
        for k, v in read_baselines_csv(path).items():
            cache.setdefault(k, v)
    for name, g in graphs:
        if name not in cache:
            log.info("computing baselines for %s", name)
            cache[name] = precompute_baselines(g, cfg.env, cfg.change_runs, derive_rng(cfg.seed, "baselines", name),
                                               rng_seed=cfg.seed)
    return cache


# -- evaluation ----------------------------------------------------------------------
def _eval_env(cfg: ExperimentConfig) -> EnvConfig:
    cascade = CascadeConfig(p=cfg.env.cascade.p, num_sims=cfg.eval_cascades)
    return dataclasses.replace(cfg.env, cascade=cascade)


def run_method_once(method: str, hidden: Graph, env: EnvConfig, rng, model=None):
    """One deployment; returns ``(influence, query_log)``."""
    if method == "gdqn":
        params, net_cfg, walk_cfg = model
        _, queries, _, influence = deploy(params, hidden, env, walk_cfg, rng, net_cfg=net_cfg)
        return influence, queries
    seeds = sample_seeds(hidden, env, rng)
    discovered, queries = SAMPLERS[method](hidden, seeds, env.T, rng)
    return evaluate_discovery(hidden, discovered, env, rng), queries


def load_model(checkpoint, walk_cfg):
    if checkpoint is None or not os.path.exists(checkpoint):
        raise DomainError(f"gdqn evaluation needs a checkpoint; {checkpoint!r} not found")
    params, net_cfg = load_params(checkpoint)
    if net_cfg.features == "deepwalk" and net_cfg.d_in != walk_cfg.dim:
        raise DomainError("checkpoint input width does not match the DeepWalk dimension")
    return params, net_cfg, walk_cfg


def run_eval(cfg: ExperimentConfig, method: str, checkpoint=None, baselines: dict | None = None) -> list:
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    model = load_model(checkpoint, cfg.walk) if method == "gdqn" else None
    graphs = load_graphs(cfg.test_graphs)
    caches = baselines_for(cfg, graphs, baselines)
    env = _eval_env(cfg)
    records = []
    for name, g in graphs:
        rng = derive_rng(cfg.seed, "eval", method, name)
        values = np.array([run_method_once(method, g, env, rng, model)[0] for _ in range(cfg.eval_episodes)])
        c = caches[name]
        try:
            imp = improve_percent(float(values.mean()), c.change_value, c.opt_value)
        except UndefinedMetricError:
            imp = float("nan")
        records.append(EvalRecord(name, method, float(values.mean()), float(values.std()), imp))
    return records


# -- training and ablation -----------------------------------------------------------
def training_source(cfg: ExperimentConfig, graphs, baselines: dict, rng):
    if cfg.synth.model == "none" or cfg.synth.mix_prob == 0.0:
        from ..training import UniformSource
        return UniformSource(graphs, baselines)
    models = {name: fit_model(g, cfg.synth.model, derive_rng(cfg.seed, "fit", name)) for name, g in graphs}
    return GraphSource(graphs, models, cfg.env, baselines, cfg.synth.mix_prob, cfg.change_runs,
                       pregenerate=cfg.synth.pregenerate or None, rng=rng)


def run_training(cfg: ExperimentConfig, net_cfg=None, dqn_cfg: DQNConfig | None = None, graphs=None,
                 baselines: dict | None = None, tag: str = "train"):
    graphs = graphs if graphs is not None else load_graphs(cfg.train_graphs)
    if not graphs:
        raise DomainError("no training graphs configured")
    baselines = baselines_for(cfg, graphs, baselines)
    rng = derive_rng(cfg.seed, tag)
    source = training_source(cfg, graphs, baselines, derive_rng(cfg.seed, tag, "synth"))
    trainer = Trainer(cfg.env, dqn_cfg or cfg.dqn, cfg.walk, net_cfg or cfg.net, rng)
    params, curve = trainer.train(source)
    return params, curve, trainer


def ablation_settings(cfg: ExperimentConfig, variant: str):
    net, dqn = cfg.net, cfg.dqn
    if variant == "no_step_reward":
        dqn = dataclasses.replace(dqn, ablate_step_reward=True)
    elif variant == "sum_pool":
        net = dataclasses.replace(net, pooling="sum_pool", graph_emb=net.gcn_widths[-1])
    elif variant == "constant_features":
        net = dataclasses.replace(net, features="constant")
    elif variant != "full":
        raise DomainError(f"unknown ablation variant {variant!r}")
    return net, dqn


def run_ablation(cfg: ExperimentConfig, graphs=None, baselines: dict | None = None, out_dir: str | None = None,
                 variants=ABLATION_VARIANTS) -> dict:
    """Train every variant from the same seed; writes ``curve_<variant>.csv`` when ``out_dir`` is given."""
    graphs = graphs if graphs is not None else load_graphs(cfg.train_graphs)
    baselines = baselines_for(cfg, graphs, baselines)
    curves = {}
    for variant in variants:
        net, dqn = ablation_settings(cfg, variant)
        _, curve, _ = run_training(cfg, net, dqn, graphs, baselines, tag="ablate")
        curves[variant] = curve
        if out_dir is not None:
            write_curve_csv(os.path.join(out_dir, f"curve_{variant}.csv"), curve, variant=variant)
    return curves


# -- centrality of queried nodes -----------------------------------------------------
class CentralityRow(NamedTuple):
    t: str
    mean_betweenness: float
    mean_degree_centrality: float
    n_samples: int


CENTRALITY_COLUMNS = list(CentralityRow._fields)
REFERENCE_ROW = "all"


def analyze_queries(hidden: Graph, logs) -> list:
    """Mean true centralities of the nodes queried at each step, then whole-graph reference means."""
    btw = betweenness_centrality(hidden)
    deg = degree_centrality(hidden)
    by_t: dict = {}
    for entries in logs:
        for q in entries:
            by_t.setdefault(q.t, []).append(q.node)
    rows = [CentralityRow(str(t), float(btw[nodes].mean()), float(deg[nodes].mean()), len(nodes))
            for t, nodes in sorted(by_t.items())]
    rows.append(CentralityRow(REFERENCE_ROW, float(btw.mean()), float(deg.mean()), hidden.node_count))
    return rows


def write_centrality_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CENTRALITY_COLUMNS)
        for r in rows:
            w.writerow([r.t, repr(r.mean_betweenness), repr(r.mean_degree_centrality), r.n_samples])


def read_centrality_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [CentralityRow(r["t"], float(r["mean_betweenness"]), float(r["mean_degree_centrality"]),
                              int(r["n_samples"])) for r in csv.DictReader(fh)]


def collect_logs(cfg: ExperimentConfig, method: str, hidden: Graph, name: str, checkpoint=None) -> list:
    model = load_model(checkpoint, cfg.walk) if method == "gdqn" else None
    rng = derive_rng(cfg.seed, "analyze", method, name)
    env = _eval_env(cfg)
    return [run_method_once(method, hidden, env, rng, model)[1] for _ in range(cfg.eval_episodes)]
