"""Run configuration: one strict JSON document wiring model, training,
and data paths together. Unknown keys are rejected with every violation
listed; the fully-resolved config echoed by cmd_train is itself a valid
input that reproduces the run."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .model import ModelConfig
from .serial import from_plain, to_plain
from .trainer import TrainConfig


@dataclass(frozen=True)
class DataConfig:
    train_rainy: Optional[str] = None
    train_clean: Optional[str] = None
    val_rainy: Optional[str] = None
    val_clean: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    data: DataConfig = DataConfig()
    output_dir: str = "runs/out"

    def validate(self) -> list[str]:
        problems = self.model.validate() + self.train.validate()
        if (self.data.train_rainy is None) != (self.data.train_clean is None):
            problems.append("data.train_rainy and data.train_clean must be set together")
        if (self.data.val_rainy is None) != (self.data.val_clean is None):
            problems.append("data.val_rainy and data.val_clean must be set together")
        return problems


def parse_run_config(doc: dict) -> RunConfig:
    """Strict parse + semantic validation; raises ConfigError listing
    every violation."""
    cfg = from_plain(RunConfig, doc, path="config")
    problems = cfg.validate()
    if problems:
        raise ConfigError(problems)
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    return parse_run_config(doc)


def resolved_dict(cfg: RunConfig) -> dict:
    return to_plain(cfg)


def write_resolved(cfg: RunConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.resolved.json"
    path.write_text(json.dumps(resolved_dict(cfg), indent=2, sort_keys=True))
    return path
