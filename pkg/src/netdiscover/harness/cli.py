"""``netdiscover`` command line: train, eval, baselines, synth, ablate, analyze."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..env import write_baselines_csv
from ..errors import DomainError, ParseError, StateError
from ..gdqn import save_params
from ..graph import write_edge_list
from ..seeding import derive_rng
from ..synthgen import fit_model, model_to_text, sample_model
from ..training import write_curve_csv
from . import experiments as ex
from .config import ExperimentConfig, load_config

log = logging.getLogger("netdiscover")

USER_ERRORS = (DomainError, ParseError, StateError, FileNotFoundError, IsADirectoryError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _global_flags(default):
    # Subcommands repeat the global flags with suppressed defaults so that a
    # flag given before the subcommand is not reset by the subparser.
    common = _Parser(add_help=False)
    common.add_argument("--config", default=default, help="experiment config file")
    common.add_argument("--seed", type=int, default=default, help="master seed (overrides the config)")
    common.add_argument("--out", default=default, help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true", default=default or False)
    return common


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netdiscover", description=__doc__, parents=[_global_flags(None)])
    common = _global_flags(argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("train", parents=[common], help="train a Q-network on the training graphs")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a method on the test graphs")
    ev.add_argument("--method", default="gdqn", choices=ex.METHODS)
    ev.add_argument("--checkpoint", help="model checkpoint (default: <out>/model.ckpt)")
    sub.add_parser("baselines", parents=[common], help="precompute CHANGE and OPT values")
    sy = sub.add_parser("synth", parents=[common], help="fit block models and sample synthetic graphs")
    sy.add_argument("--model", choices=("sbm", "ssm"), default=None)
    sy.add_argument("--count", type=int, default=5)
    sub.add_parser("ablate", parents=[common], help="train the full model and three ablations")
    an = sub.add_parser("analyze", parents=[common], help="centrality of queried nodes per step")
    an.add_argument("--method", default="h2", choices=ex.METHODS)
    an.add_argument("--checkpoint")
    return p


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise UsageError("--config is required")
    cfg = load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["output_dir"] = os.path.abspath(args.out)
    cfg = cfg.with_overrides(**over)
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg


def cmd_baselines(cfg, args):
    graphs = ex.load_graphs(cfg.train_graphs) + ex.load_graphs(cfg.test_graphs)
    caches = ex.baselines_for(cfg, graphs)
    write_baselines_csv(ex.baselines_path(cfg), caches)
    for name, c in caches.items():
        print(f"{name}: CHANGE={c.change_value:.4f} OPT={c.opt_value:.4f}")


def _save_baselines(cfg, graphs):
    caches = ex.baselines_for(cfg, graphs)
    write_baselines_csv(ex.baselines_path(cfg), caches)
    return caches


def cmd_train(cfg, args):
    graphs = ex.load_graphs(cfg.train_graphs)
    caches = _save_baselines(cfg, graphs)
    params, curve, _ = ex.run_training(cfg, graphs=graphs, baselines=caches)
    save_params(os.path.join(cfg.output_dir, "model.ckpt"), params, cfg.net)
    write_curve_csv(os.path.join(cfg.output_dir, "curve.csv"), curve)
    tail = [r.scaled_reward for r in curve[-100:]]
    if tail:
        print(f"trained {len(curve)} episodes; trailing mean scaled reward {sum(tail) / len(tail):.4f}")


def cmd_eval(cfg, args):
    ckpt = args.checkpoint or os.path.join(cfg.output_dir, "model.ckpt")
    graphs = ex.load_graphs(cfg.test_graphs)
    caches = _save_baselines(cfg, graphs)
    records = ex.run_eval(cfg, args.method, ckpt if args.method == "gdqn" else None, caches)
    ex.write_eval_csv(os.path.join(cfg.output_dir, f"eval_{args.method}.csv"), records)
    for r in records:
        print(f"{r.network}\t{r.method}\t{r.influence_mean:.3f} ± {r.influence_std:.3f}\t{r.improve_percent:.2f}%")


def cmd_synth(cfg, args):
    kind = args.model or (cfg.synth.model if cfg.synth.model != "none" else "sbm")
    out = os.path.join(cfg.output_dir, "synth")
    os.makedirs(out, exist_ok=True)
    for name, g in ex.load_graphs(cfg.train_graphs):
        model = fit_model(g, kind, derive_rng(cfg.seed, "fit", name))
        with open(os.path.join(out, f"{name}.{kind}"), "w", encoding="utf-8") as fh:
            fh.write(model_to_text(model))
        rng = derive_rng(cfg.seed, "synth", name)
        for i in range(args.count):
            write_edge_list(sample_model(model, rng), os.path.join(out, f"{name}_{i}.edges"))
        print(f"{name}: {kind.upper()} with {len(model.community_sizes)} communities, {args.count} samples")


def cmd_ablate(cfg, args):
    graphs = ex.load_graphs(cfg.train_graphs)
    caches = _save_baselines(cfg, graphs)
    curves = ex.run_ablation(cfg, graphs, caches, out_dir=cfg.output_dir)
    for variant, curve in curves.items():
        tail = [r.scaled_reward for r in curve[-100:]]
        mean = sum(tail) / len(tail) if tail else float("nan")
        print(f"{variant}: trailing mean scaled reward {mean:.4f}")


def cmd_analyze(cfg, args):
    ckpt = args.checkpoint or os.path.join(cfg.output_dir, "model.ckpt")
    for name, g in ex.load_graphs(cfg.test_graphs):
        logs = ex.collect_logs(cfg, args.method, g, name, ckpt if args.method == "gdqn" else None)
        rows = ex.analyze_queries(g, logs)
        ex.write_centrality_csv(os.path.join(cfg.output_dir, f"centrality_{args.method}_{name}.csv"), rows)
        for r in rows:
            print(f"{name}\t{r.t}\t{r.mean_betweenness:.3f}\t{r.mean_degree_centrality:.4f}\t{r.n_samples}")


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "baselines": cmd_baselines,
    "synth": cmd_synth,
    "ablate": cmd_ablate,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip() + "\nnetdiscover: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
        return 0
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except USER_ERRORS as exc:
        print(f"netdiscover: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - top-level guard maps crashes to exit code 2
        log.exception("internal error")
        print(f"netdiscover: internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
