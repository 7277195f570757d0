"""Sensor-bit to spike-train encoder and rate-based spike-count decoder,
tying one simulator tick to a fixed block of processor cycles."""
from __future__ import annotations

from dataclasses import dataclass

from .snn import INPUT_SPIKE_MAGNITUDE, CaspianProcessor
from .world import WorldConfig

#: Cycles at the start of a tick reserved for spike propagation; output
#: fires during these cycles are ignored by the decoder.
PROPAGATION_CYCLES = 3

#: Cycles over which output fires are counted and rate-decoded.
COUNTING_CYCLES = 10

CYCLES_PER_TICK = PROPAGATION_CYCLES + COUNTING_CYCLES


@dataclass(frozen=True)
class DecodedCommand:
    """Normalized output rates and the velocity command they map to."""

    rates: tuple[float, float, float, float]
    v: float
    omega: float


def encode(proc: CaspianProcessor, h: int) -> None:
    """One-hot encode the sensor bit as a spike train for the next tick.

    h = 0 stimulates input neuron 0, h = 1 stimulates input neuron 1; the
    chosen neuron receives a maximal spike on each of the tick's cycles.
    """
    if h not in (0, 1):
        raise ValueError(f"sensor bit must be 0 or 1, got {h!r}")
    proc.inject_train(proc.network.inputs[h], INPUT_SPIKE_MAGNITUDE,
                      proc.cycle, CYCLES_PER_TICK)


def decode(counts: tuple[int, ...], config: WorldConfig) -> DecodedCommand:
    """Turn the four output fire counts into a velocity command.

    Each count is normalized by the counting window; paired differences
    give signed rates scaled to the actuation limits, quantized by
    construction to multiples of v_max/10 and omega_max/10.
    """
    if len(counts) != 4:
        raise ValueError(f"expected 4 output counts, got {len(counts)}")
    for c in counts:
        if not 0 <= c <= COUNTING_CYCLES:
            raise ValueError(
                f"fire count {c} outside [0, {COUNTING_CYCLES}]: "
                "counting window bug")
    rates = tuple(c / COUNTING_CYCLES for c in counts)
    v = (counts[0] - counts[1]) * config.v_max / COUNTING_CYCLES
    omega = (counts[2] - counts[3]) * config.omega_max / COUNTING_CYCLES
    return DecodedCommand(rates, v, omega)


def controller_tick(proc: CaspianProcessor, h: int,
                    config: WorldConfig) -> tuple[float, float]:
    """Run one sense-act tick of the processor and decode the command.

    The returned (v, omega) is meant to be applied on the next simulator
    tick. Charges and in-flight spikes persist across ticks; only the fire
    counters are windowed to the tick's last cycles.
    """
    if h not in (0, 1):
        raise ValueError(f"sensor bit must be 0 or 1, got {h!r}")
    # One fused run with in-loop stimulation: equivalent to encode() plus
    # separate propagation/counting runs, without the scheduling traffic.
    proc.run(CYCLES_PER_TICK,
             stimulus=(proc.network.inputs[h], INPUT_SPIKE_MAGNITUDE),
             count_from=PROPAGATION_CYCLES)
    cmd = decode(proc.read_and_reset_counts(), config)
    return cmd.v, cmd.omega
