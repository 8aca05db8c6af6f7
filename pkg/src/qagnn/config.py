"""Run configuration read from an INI-style key/value file.

Example::

    [data]
    path = flows.csv
    src_column = src_ip
    dst_column = dst_ip
    label_column = label
    normal_label = 0

    [graph]
    threshold = 0.9

    [encoder]
    n_layers = 2
    backend = statevector

    [model]
    variant = full

    [train]
    max_epochs = 200

    [output]
    dir = run

Missing keys take the defaults below. Relative paths resolve against the
config file's directory.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .data import PipelineConfig
from .feature_map import EncoderConfig
from .model import VARIANTS
from .training import TrainConfig


@dataclass
class GraphConfig:
    threshold: float = 0.9
    self_loops: bool = False
    mask_two_hop_diagonal: bool = False


@dataclass
class ModelConfig:
    variant: str = "full"
    hidden: int = 8
    activation: str = "relu"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")


@dataclass
class RunConfig:
    data_path: Optional[Path] = None
    out_dir: Path = Path("run")
    data: PipelineConfig = field(default_factory=PipelineConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


_SECTIONS = {"data": PipelineConfig, "graph": GraphConfig, "encoder": EncoderConfig,
             "model": ModelConfig, "train": TrainConfig}


def _coerce(raw: str, default):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(v) for v in raw.split(","))
    return raw.strip()


def _build(cls, values: dict):
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise KeyError(f"unknown key {key!r} for section of {cls.__name__}")
        kwargs[key] = _coerce(raw, getattr(defaults, key))
    return cls(**kwargs)


def load_config(path=None, overrides: Optional[list[str]] = None) -> RunConfig:
    """Read ``path`` (if given) and apply ``section.key=value`` overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file {path} not found")
        parser.read(path, encoding="utf-8")
        base = path.parent
    for item in overrides or []:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ValueError(f"override {item!r} must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value)

    unknown = set(parser.sections()) - set(_SECTIONS) - {"output"}
    if unknown:
        raise KeyError(f"unknown config section(s): {sorted(unknown)}")
    sec = {s: dict(parser.items(s)) if parser.has_section(s) else {} for s in list(_SECTIONS) + ["output"]}
    data_path = sec["data"].pop("path", None)
    out = sec["output"].pop("dir", "run")
    if sec["output"]:
        raise KeyError(f"unknown output key(s): {sorted(sec['output'])}")
    return RunConfig(
        data_path=(base / data_path) if data_path else None,
        out_dir=base / out,
        **{name: _build(cls, sec[name]) for name, cls in _SECTIONS.items()},
    )
