"""Line-oriented experiment configuration: ``section.key = value``.

Values are ints, floats, strings, comma-separated lists, or ``;``-separated
rows of comma-separated lists. A one-element list (or one-row table) is
written with a trailing separator so it round-trips with its shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError

SECTIONS = ("experiment", "env", "agent")


@dataclass
class ExperimentConfig:
    env_kind: str
    agent_kind: str
    T: int
    seeds: tuple = (0,)
    env_params: dict = field(default_factory=dict)
    agent_params: dict = field(default_factory=dict)
    out: str = "results"


def _scalar(tok: str) -> Any:
    tok = tok.strip()
    for conv in (int, float):
        try:
            return conv(tok)
        except ValueError:
            pass
    return tok


def parse_value(text: str) -> Any:
    text = text.strip()
    if ";" in text:
        return [parse_value(row if "," in row else row + ",") for row in text.split(";") if row.strip()]
    if "," in text:
        return [_scalar(t) for t in text.split(",") if t.strip()]
    return _scalar(text)


def format_value(v: Any) -> str:
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], (list, tuple)):
            body = ";".join(format_value(list(row)) for row in v)
            return body + ";" if len(v) == 1 else body
        body = ",".join(format_value(x) for x in v)
        return body + "," if len(v) == 1 else body
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str) -> ExperimentConfig:
    raw: dict = {s: {} for s in SECTIONS}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'section.key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigurationError(f"line {lineno}: key {key!r} lacks a section")
        section, name = key.split(".", 1)
        if section not in raw:
            raise ConfigurationError(f"line {lineno}: unknown section {section!r}")
        if name in raw[section]:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        raw[section][name] = parse_value(val)
    exp = raw["experiment"]
    env = raw["env"]
    agent = raw["agent"]
    for sec, name in (("env", "kind"), ("agent", "kind"), ("experiment", "T")):
        if name not in raw[sec]:
            raise ConfigurationError(f"missing required key {sec}.{name}")
    T = exp.pop("T")
    if not isinstance(T, int) or T < 1:
        raise ConfigurationError("experiment.T must be a positive integer")
    seeds = exp.pop("seeds", [0])
    seeds = tuple(seeds) if isinstance(seeds, list) else (seeds,)
    if not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigurationError("experiment.seeds must be nonnegative integers")
    out = str(exp.pop("out", "results"))
    if exp:
        raise ConfigurationError(f"unknown key experiment.{sorted(exp)[0]}")
    env_kind = str(env.pop("kind"))
    agent_kind = str(agent.pop("kind"))
    return ExperimentConfig(env_kind, agent_kind, T, seeds, env, agent, out)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [f"experiment.T = {cfg.T}",
             f"experiment.seeds = {format_value(list(cfg.seeds))}",
             f"experiment.out = {cfg.out}",
             f"env.kind = {cfg.env_kind}"]
    lines += [f"env.{k} = {format_value(v)}" for k, v in sorted(cfg.env_params.items())]
    lines.append(f"agent.kind = {cfg.agent_kind}")
    lines += [f"agent.{k} = {format_value(v)}" for k, v in sorted(cfg.agent_params.items())]
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from None
    return parse_config(text)
