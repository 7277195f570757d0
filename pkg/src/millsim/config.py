"""Experiment configuration: every base parameter in one serializable
record, with the reference defaults."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .evolution import EvolutionConfig
from .world import WorldConfig

OPTIMIZERS = ("eons", "cmaes")
CONTROLLERS = ("snn", "symbolic")

#: Controller family each optimizer searches over.
OPTIMIZER_CONTROLLER = {"eons": "snn", "cmaes": "symbolic"}


@dataclass
class ExperimentConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    horizon: int = 1000  # simulated ticks per fitness evaluation
    window: int = 450  # rolling window for the circliness score
    population_size: int = 100
    epochs: int = 1000
    optimizer: str = "eons"
    controller: str = "snn"
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    train_seed: int = 42  # fixed spawn seed used for every training run
    eval_seeds: list[int] = field(default_factory=list)
    workers: int = 8
    output_dir: str = "runs/experiment"

    def __post_init__(self):
        # Keep the shared population size authoritative.
        if self.evolution.population_size != self.population_size:
            self.evolution = dataclasses.replace(
                self.evolution, population_size=self.population_size)

    def validate(self) -> None:
        self.world.validate()
        self.evolution.validate()
        problems = []
        if self.window > self.horizon:
            problems.append("window must not exceed horizon")
        if self.window < 1 or self.horizon < 1:
            problems.append("window and horizon must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"optimizer must be one of {OPTIMIZERS}")
        elif self.controller != OPTIMIZER_CONTROLLER[self.optimizer]:
            problems.append(
                f"optimizer {self.optimizer!r} drives the "
                f"{OPTIMIZER_CONTROLLER[self.optimizer]!r} controller, "
                f"not {self.controller!r}")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict:
        return {
            "world": dataclasses.asdict(self.world),
            "horizon": self.horizon,
            "window": self.window,
            "population_size": self.population_size,
            "epochs": self.epochs,
            "optimizer": self.optimizer,
            "controller": self.controller,
            "evolution": dataclasses.asdict(self.evolution),
            "train_seed": self.train_seed,
            "eval_seeds": list(self.eval_seeds),
            "workers": self.workers,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        doc = dict(doc)
        world = WorldConfig(**doc.pop("world", {}))
        evolution = EvolutionConfig(**doc.pop("evolution", {}))
        unknown = set(doc) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config = cls(world=world, evolution=evolution, **doc)
        if "optimizer" in doc and "controller" not in doc:
            config.controller = OPTIMIZER_CONTROLLER[config.optimizer]
        return config

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_config(path: str | Path) -> ExperimentConfig:
    config = ExperimentConfig.from_dict(
        json.loads(Path(path).read_text()))
    config.validate()
    return config


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(config.to_json() + "\n")
