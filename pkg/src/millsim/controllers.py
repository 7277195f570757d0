"""The two controller families behind one sense->command contract: the
4-parameter symbolic table and the evolved spiking network."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from . import codec
from .snn import CaspianProcessor, Network
from .world import WorldConfig


@dataclass(frozen=True)
class SymbolicParams:
    """Constant-command table: (v_a, omega_a) when seeing, (v_b, omega_b)
    otherwise."""

    v_a: float
    v_b: float
    omega_a: float
    omega_b: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> SymbolicParams:
        doc = json.loads(text)
        return cls(doc["v_a"], doc["v_b"], doc["omega_a"], doc["omega_b"])


def symbolic_next(params: SymbolicParams, h: int) -> tuple[float, float]:
    """Table lookup; the command is applied on the next tick."""
    if h:
        return params.v_a, params.omega_a
    return params.v_b, params.omega_b


class SymbolicController:
    """Memoryless per-agent instance of the symbolic table."""

    def __init__(self, params: SymbolicParams, config: WorldConfig):
        self.params = params

    def next_command(self, h: int) -> tuple[float, float]:
        return symbolic_next(self.params, h)


class SnnController:
    """Per-agent spiking controller owning its processor state."""

    def __init__(self, network: Network, config: WorldConfig):
        self.processor = CaspianProcessor(network)
        self.config = config

    def next_command(self, h: int) -> tuple[float, float]:
        return codec.controller_tick(self.processor, h, self.config)


def snn_next(instance: SnnController, h: int) -> tuple[float, float]:
    """Functional alias for SnnController.next_command()."""
    return instance.next_command(h)


def make_controller(artifact: SymbolicParams | Network,
                    config: WorldConfig) -> SymbolicController | SnnController:
    """Build a fresh per-agent controller instance from a shared artifact.

    Swarms are homogeneous: every agent gets an instance of the same
    parameters or network, with independent runtime state.
    """
    if isinstance(artifact, SymbolicParams):
        return SymbolicController(artifact, config)
    if isinstance(artifact, Network):
        return SnnController(artifact, config)
    raise TypeError(f"unknown controller artifact type {type(artifact)!r}")
