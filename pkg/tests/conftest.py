from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from millsim.config import ExperimentConfig
from millsim.world import WorldConfig


@pytest.fixture
def world_config() -> WorldConfig:
    return WorldConfig()


@pytest.fixture
def small_experiment() -> ExperimentConfig:
    """A fast experiment for plumbing tests: tiny horizon, one worker."""
    config = ExperimentConfig(horizon=60, window=30, population_size=8,
                              epochs=3, workers=1,
                              optimizer="eons", controller="snn")
    config.validate()
    return config
