"""Run configuration: a nested YAML file plus ``--set key=value`` overrides.

``workers`` defaults to the number of CPUs available to the process.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .envs import make_env
from .mcts import SearchConfig
from .train import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class EvalConfig:
    method: str = "auto"
    iters_list: list[int] = field(default_factory=lambda: [0, 8, 64])
    seeds: list[int] = field(default_factory=lambda: list(range(8)))
    horizon: int | None = None
    episodes: int = 32
    node_budget: int = 1_000_000

    def validate(self) -> None:
        if self.method not in ("auto", "exact", "sampled"):
            raise ValueError(f"method must be auto, exact or sampled, got {self.method!r}")
        if not self.iters_list or any(i < 0 for i in self.iters_list):
            raise ValueError("iters_list must be a non-empty list of counts >= 0")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass
class BenchConfig:
    searches: int = 3

    def validate(self) -> None:
        if self.searches < 1:
            raise ValueError("searches must be >= 1")


@dataclass
class RunConfig:
    env: dict = field(default_factory=lambda: {"name": "asym22(1)"})
    train: TrainConfig = field(default_factory=TrainConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    out: str = "runs/default"
    seed: int = 0
    workers: int = 1

    def make_env(self):
        params = {k: v for k, v in self.env.items() if k != "name"}
        name = self.env.get("name")
        if not name:
            raise ConfigError("env.name is required")
        try:
            return make_env(name, **params)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"env: {e}") from e

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"].pop("search")
        return d


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def _build(cls, data: dict, section: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key {section}.{sorted(unknown)[0]}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"{section}: {e}") from e


def set_dotted(d: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
        if not isinstance(d, dict):
            raise ConfigError(f"cannot set {key}: {p} is not a section")
    d[parts[-1]] = value


def parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def load_config(path=None, overrides=(), seed: int | None = None, workers: int | None = None,
                out: str | None = None) -> RunConfig:
    """Read, override, resolve defaults and validate. Raises :class:`ConfigError` on any problem."""
    raw: dict = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid YAML: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
    for item in overrides:
        set_dotted(raw, *parse_override(item))
    for key, val in (("seed", seed), ("workers", workers), ("out", out)):
        if val is not None:
            raw[key] = val

    top = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]}")
    env = raw.get("env") or {"name": "asym22(1)"}
    if not isinstance(env, dict):
        raise ConfigError("env must be a mapping")
    search = _build(SearchConfig, raw.get("search"), "search")
    try:
        seed_, workers_ = int(raw.get("seed", 0)), int(raw.get("workers") or default_workers())
    except (TypeError, ValueError) as e:
        raise ConfigError(f"seed and workers must be integers: {e}") from e
    train_raw = dict(raw.get("train") or {})
    train_raw.setdefault("seed", seed_)
    train_raw.setdefault("workers", workers_)
    train = _build(TrainConfig, train_raw, "train")
    train.search = search
    cfg = RunConfig(env=env, train=train, search=search,
                    eval=_build(EvalConfig, raw.get("eval"), "eval"),
                    bench=_build(BenchConfig, raw.get("bench"), "bench"),
                    out=str(raw.get("out", "runs/default")),
                    seed=seed_, workers=workers_)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    gamma = cfg.env.get("gamma")
    if gamma is not None and not (isinstance(gamma, (int, float)) and 0.0 <= gamma <= 1.0):
        raise ConfigError(f"env.gamma must lie in [0, 1], got {gamma!r}")
    cfg.make_env()
    for section in ("search", "train", "eval", "bench"):
        try:
            getattr(cfg, section).validate()
        except ValueError as e:
            raise ConfigError(f"{section}: {e}") from e
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
