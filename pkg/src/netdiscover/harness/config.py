"""Experiment configuration from ``[section]`` / ``key = value`` text files."""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

from ..deepwalk import WalkConfig
from ..env import EnvConfig
from ..errors import DomainError
from ..gdqn import NetConfig
from ..influence import CascadeConfig
from ..training import DQNConfig


class ConfigError(DomainError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    model: str = "none"
    mix_prob: float = 0.5
    pregenerate: int = 0

    def __post_init__(self):
        if self.model not in ("none", "sbm", "ssm"):
            raise ConfigError("synth.model must be none, sbm or ssm")
        if not 0.0 <= self.mix_prob <= 1.0:
            raise ConfigError("synth.mix_prob must lie in [0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    train_graphs: tuple = ()
    test_graphs: tuple = ()
    env: EnvConfig = field(default_factory=EnvConfig)
    dqn: DQNConfig = field(default_factory=DQNConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    net: NetConfig = field(default_factory=NetConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    seed: int = 0
    output_dir: str = "out"
    eval_episodes: int = 10
    eval_cascades: int = 100
    change_runs: int = 30

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


_EXPERIMENT_KEYS = {"seed": int, "output_dir": str, "eval_episodes": int, "eval_cascades": int, "change_runs": int}
_ENV_KEYS = {"T": int, "num_seeds": int, "activate_budget": int, "clip_reward": bool, "p": float, "num_sims": int}


def _coerce(raw: str, kind, where: str):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(int(x) for x in raw.replace(",", " ").split())
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r}") from None


def _types_of(cls) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        if not f.init:
            continue
        default = f.default if f.default is not dataclasses.MISSING else None
        out[f.name] = tuple if isinstance(default, tuple) else type(default) if default is not None else str
    return out


def _section(cp, name: str, types: dict) -> dict:
    if not cp.has_section(name):
        return {}
    values = {}
    for key, raw in cp.items(name):
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        values[key] = _coerce(raw, types[key], f"[{name}] {key}")
    return values


def _graph_list(cp, name: str, base: str) -> tuple:
    if not cp.has_section(name):
        return ()
    out = []
    for label, raw in cp.items(name):
        path = raw.strip()
        if not os.path.isabs(path):
            path = os.path.normpath(os.path.join(base, path))
        if not os.path.exists(path):
            raise ConfigError(f"[{name}] {label}: no such file {path}")
        out.append((label, path))
    return tuple(out)


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"experiment", "train_graphs", "test_graphs", "env", "dqn", "walk", "net", "synth"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")

    exp = _section(cp, "experiment", _EXPERIMENT_KEYS)
    env_raw = _section(cp, "env", _ENV_KEYS)
    cascade = CascadeConfig(**{k: env_raw.pop(k) for k in ("p", "num_sims") if k in env_raw})
    try:
        env = EnvConfig(cascade=cascade, **env_raw)
        dqn = DQNConfig(**_section(cp, "dqn", _types_of(DQNConfig)))
        walk = WalkConfig(**_section(cp, "walk", _types_of(WalkConfig)))
        net_raw = _section(cp, "net", _types_of(NetConfig))
        net_raw.setdefault("d_in", walk.dim)
        net = NetConfig(**net_raw)
        synth = SynthConfig(**_section(cp, "synth", _types_of(SynthConfig)))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    if net.features == "deepwalk" and net.d_in != walk.dim:
        raise ConfigError("[net] d_in must equal [walk] dim")
    if "output_dir" in exp and not os.path.isabs(exp["output_dir"]):
        exp["output_dir"] = os.path.normpath(os.path.join(base_dir, exp["output_dir"]))
    return ExperimentConfig(
        train_graphs=_graph_list(cp, "train_graphs", base_dir),
        test_graphs=_graph_list(cp, "test_graphs", base_dir),
        env=env, dqn=dqn, walk=walk, net=net, synth=synth, **exp,
    )


def load_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"no such config file {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), os.path.dirname(os.path.abspath(path)))
