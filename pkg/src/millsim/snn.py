"""Cycle-accurate emulator of a Caspian-style integer LIF spiking processor
with delayed synapses, plus the evolvable network description it runs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import run_cycles

SCHEMA_VERSION = 1

THRESHOLD_RANGE = (0, 127)
WEIGHT_RANGE = (-127, 127)
DELAY_RANGE = (0, 255)
LEAK_CHOICES = (None, 1, 2, 4, 8, 16)
CHARGE_FLOOR = -127

#: Magnitude of externally injected sensor spikes; the maximum weight, so an
#: input neuron fires on every stimulated cycle regardless of its threshold.
INPUT_SPIKE_MAGNITUDE = 127

N_INPUTS = 2
N_OUTPUTS = 4

ROLES = ("input", "hidden", "output")


class NetworkValidationError(ValueError):
    """A network violates the processor's parameter ranges or structure."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class Neuron:
    id: int
    threshold: int
    leak: int | None = None  # decay time constant in cycles, None = no leak
    axonal_delay: int = 0
    role: str = "hidden"


@dataclass
class Synapse:
    source: int
    target: int
    weight: int
    delay: int


@dataclass
class Network:
    """Evolvable SNN genome: neurons, synapses and the fixed I/O binding."""

    neurons: list[Neuron] = field(default_factory=list)
    synapses: list[Synapse] = field(default_factory=list)
    inputs: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)

    def neuron_ids(self) -> set[int]:
        return {n.id for n in self.neurons}

    def hidden_ids(self) -> list[int]:
        return [n.id for n in self.neurons if n.role == "hidden"]

    def copy(self) -> Network:
        return Network([replace(n) for n in self.neurons],
                       [replace(s) for s in self.synapses],
                       list(self.inputs), list(self.outputs))

    def canonical(self) -> Network:
        """Same network with neurons sorted by id, synapses by (source,
        target); the form used for serialization and byte comparison."""
        return Network(sorted((replace(n) for n in self.neurons),
                              key=lambda n: n.id),
                       sorted((replace(s) for s in self.synapses),
                              key=lambda s: (s.source, s.target)),
                       list(self.inputs), list(self.outputs))


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_network(net: Network, require_io: bool = True) -> list[str]:
    """Return every parameter/structure violation (empty list = valid)."""
    problems = []
    ids = set()
    for n in net.neurons:
        if not _is_int(n.id):
            problems.append(f"neuron id {n.id!r}: not an integer")
            continue
        if n.id in ids:
            problems.append(f"neuron {n.id}: duplicate id")
        ids.add(n.id)
        if not _is_int(n.threshold):
            problems.append(f"neuron {n.id}: threshold {n.threshold!r} "
                            "is not an integer")
        elif not THRESHOLD_RANGE[0] <= n.threshold <= THRESHOLD_RANGE[1]:
            problems.append(f"neuron {n.id}: threshold {n.threshold} "
                            f"outside {list(THRESHOLD_RANGE)}")
        if n.leak not in LEAK_CHOICES:
            problems.append(f"neuron {n.id}: leak {n.leak!r} not one of "
                            f"{LEAK_CHOICES}")
        if n.axonal_delay != 0:
            problems.append(f"neuron {n.id}: axonal_delay {n.axonal_delay!r} "
                            "must be 0")
        if n.role not in ROLES:
            problems.append(f"neuron {n.id}: unknown role {n.role!r}")
    seen_edges = set()
    for s in net.synapses:
        tag = f"synapse {s.source}->{s.target}"
        if s.source not in ids or s.target not in ids:
            problems.append(f"{tag}: endpoint not in network")
        if (s.source, s.target) in seen_edges:
            problems.append(f"{tag}: duplicate edge")
        seen_edges.add((s.source, s.target))
        if not _is_int(s.weight):
            problems.append(f"{tag}: weight {s.weight!r} is not an integer")
        elif not WEIGHT_RANGE[0] <= s.weight <= WEIGHT_RANGE[1]:
            problems.append(f"{tag}: weight {s.weight} outside "
                            f"{list(WEIGHT_RANGE)}")
        if not _is_int(s.delay):
            problems.append(f"{tag}: delay {s.delay!r} is not an integer")
        elif not DELAY_RANGE[0] <= s.delay <= DELAY_RANGE[1]:
            problems.append(f"{tag}: delay {s.delay} outside "
                            f"{list(DELAY_RANGE)}")
    roles = {n.id: n.role for n in net.neurons}
    for nid in net.inputs:
        if roles.get(nid) != "input":
            problems.append(f"io inputs: neuron {nid} missing or not input")
    for nid in net.outputs:
        if roles.get(nid) != "output":
            problems.append(f"io outputs: neuron {nid} missing or not output")
    if require_io:
        n_in = sum(1 for n in net.neurons if n.role == "input")
        n_out = sum(1 for n in net.neurons if n.role == "output")
        if n_in != N_INPUTS or len(net.inputs) != N_INPUTS:
            problems.append(f"network must have exactly {N_INPUTS} input "
                            f"neurons, found {n_in}")
        if n_out != N_OUTPUTS or len(net.outputs) != N_OUTPUTS:
            problems.append(f"network must have exactly {N_OUTPUTS} output "
                            f"neurons, found {n_out}")
    return problems


def network_to_dict(net: Network) -> dict:
    c = net.canonical()
    return {
        "version": SCHEMA_VERSION,
        "neurons": [{"id": n.id, "threshold": n.threshold, "leak": n.leak,
                     "axonal_delay": n.axonal_delay, "role": n.role}
                    for n in c.neurons],
        "synapses": [{"from": s.source, "to": s.target, "weight": s.weight,
                      "delay": s.delay} for s in c.synapses],
        "io": {"inputs": list(c.inputs), "outputs": list(c.outputs)},
    }


def network_to_json(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=2, sort_keys=True)


def network_from_dict(doc: dict) -> Network:
    """Parse a network document; range and integer violations raise."""
    if doc.get("version") != SCHEMA_VERSION:
        raise NetworkValidationError(
            [f"unsupported network schema version {doc.get('version')!r}"])
    net = Network(
        neurons=[Neuron(n["id"], n["threshold"], n.get("leak"),
                        n.get("axonal_delay", 0), n.get("role", "hidden"))
                 for n in doc.get("neurons", [])],
        synapses=[Synapse(s["from"], s["to"], s["weight"], s["delay"])
                  for s in doc.get("synapses", [])],
        inputs=list(doc.get("io", {}).get("inputs", [])),
        outputs=list(doc.get("io", {}).get("outputs", [])),
    )
    problems = validate_network(net, require_io=False)
    if problems:
        raise NetworkValidationError(problems)
    return net


def network_from_json(text: str) -> Network:
    return network_from_dict(json.loads(text))


def _decayed(charge: int, tc: int) -> int:
    """One leak step: shrink toward zero by ceil(|charge| / tc), exactly."""
    if charge > 0:
        return charge - (charge + tc - 1) // tc
    if charge < 0:
        return charge + (-charge + tc - 1) // tc
    return 0


class CaspianProcessor:
    """Runtime state of one network on the emulated processor.

    Per cycle, in order: queued charges due this cycle are delivered, leak
    is applied, then any neuron that received a delivery and whose charge
    meets its threshold fires once, resets to 0 and enqueues its outgoing
    spikes at cycle + delay + 1. Charges are clamped at CHARGE_FLOOR and
    stay integers throughout.

    Pending deliveries live in a ring buffer of RING_SIZE cycles, which
    bounds how far ahead a stimulus may be scheduled.
    """

    RING_SIZE = 1024

    def __init__(self, network: Network, check_io: bool = True,
                 record_trace: bool = False):
        problems = validate_network(network, require_io=check_io)
        if problems:
            raise NetworkValidationError(problems)
        self.network = network
        ids = sorted(n.id for n in network.neurons)
        self._index = {nid: i for i, nid in enumerate(ids)}
        self._ids = ids
        n = len(ids)
        by_id = {neuron.id: neuron for neuron in network.neurons}
        self._threshold = np.array([by_id[nid].threshold for nid in ids],
                                   dtype=np.int32)
        self._leak = np.array([by_id[nid].leak or 0 for nid in ids],
                              dtype=np.int32)
        order = sorted(range(len(network.synapses)),
                       key=lambda k: (self._index[network.synapses[k].source],
                                      self._index[network.synapses[k].target]))
        counts_per = [0] * n
        for s in network.synapses:
            counts_per[self._index[s.source]] += 1
        self._indptr = np.zeros(n + 1, dtype=np.int32)
        self._indptr[1:] = np.cumsum(counts_per)
        ordered = [network.synapses[k] for k in order]
        self._syn_tgt = np.array([self._index[s.target] for s in ordered],
                                 dtype=np.int32)
        self._syn_w = np.array([s.weight for s in ordered], dtype=np.int32)
        self._syn_d = np.array([s.delay for s in ordered], dtype=np.int32)
        self._input_ids = set(network.inputs)
        self._output_idx = [self._index[nid] for nid in network.outputs]
        self._out_slot = np.full(n, -1, dtype=np.int32)
        for k, oidx in enumerate(self._output_idx):
            self._out_slot[oidx] = k
        self.trace: list[tuple[int, int]] | None = [] if record_trace else None
        self._no_fires = np.zeros((0, 2), dtype=np.int64)
        self.cycle = 0
        self._charge = np.zeros(n, dtype=np.int32)
        self._ring_w = np.zeros((self.RING_SIZE, n), dtype=np.int32)
        self._ring_t = np.zeros((self.RING_SIZE, n), dtype=np.uint8)
        self._counts = np.zeros(len(self._output_idx), dtype=np.int64)
        self._counting = False

    # -- stimulus ---------------------------------------------------------

    def _check_horizon(self, at_cycle: int) -> None:
        if at_cycle < self.cycle:
            raise ValueError(f"cannot inject at past cycle {at_cycle} "
                             f"(processor at {self.cycle})")
        # Synapse delays reach 257 cycles ahead; both kinds of outstanding
        # delivery must fit in the ring without wrapping onto each other.
        if at_cycle - self.cycle > self.RING_SIZE - 258:
            raise ValueError(
                f"injection horizon exceeded: cycle {at_cycle} is more than "
                f"{self.RING_SIZE - 258} cycles ahead of {self.cycle}")

    def inject(self, input_neuron: int, value: int, at_cycle: int) -> None:
        """Schedule an external charge delivery to an input neuron."""
        if input_neuron not in self._input_ids:
            raise ValueError(f"neuron {input_neuron} is not an input neuron")
        if not _is_int(value):
            raise ValueError(f"injected value {value!r} is not an integer")
        self._check_horizon(at_cycle)
        idx = self._index[input_neuron]
        slot = at_cycle % self.RING_SIZE
        self._ring_w[slot, idx] += value
        self._ring_t[slot, idx] = 1

    def inject_train(self, input_neuron: int, value: int, start_cycle: int,
                     cycles: int) -> None:
        """Schedule one delivery per cycle over [start, start + cycles)."""
        for at in range(start_cycle, start_cycle + cycles):
            self.inject(input_neuron, value, at)

    # -- execution --------------------------------------------------------

    def run(self, cycles: int, count: bool | None = None,
            stimulus: tuple[int, int] | None = None,
            count_from: int | None = None) -> None:
        """Advance the clock; set `count` to toggle output-fire tallying.

        `stimulus` = (input_neuron, magnitude) delivers that charge to the
        input neuron on every executed cycle, equivalent to (but faster
        than) pre-scheduling the train with inject(). `count_from` starts
        tallying at that in-call cycle offset instead of using the flag.
        """
        if cycles < 1:
            raise ValueError("cycles must be >= 1")
        if count_from is None:
            if count is not None:
                self._counting = count
            count_from = 0 if self._counting else cycles
        else:
            self._counting = count_from < cycles
        stim_idx = -1
        stim_mag = 0
        if stimulus is not None:
            neuron, stim_mag = stimulus
            if neuron not in self._input_ids:
                raise ValueError(f"neuron {neuron} is not an input neuron")
            stim_idx = self._index[neuron]
        if self.trace is None:
            fires = self._no_fires
        else:
            fires = np.zeros((cycles * len(self._ids), 2), dtype=np.int64)
        n_fires = run_cycles(self._ring_w, self._ring_t, self._charge,
                             self._leak, self._threshold, self._indptr,
                             self._syn_tgt, self._syn_w, self._syn_d,
                             self._out_slot, self._counts,
                             self.cycle, cycles, count_from,
                             stim_idx, stim_mag, fires, 0)
        if self.trace is not None:
            ids = self._ids
            self.trace.extend((int(fires[k, 0]), ids[fires[k, 1]])
                              for k in range(n_fires))
        self.cycle += cycles

    # -- readout ----------------------------------------------------------

    def read_and_reset_counts(self) -> tuple[int, ...]:
        """Output-neuron fire counts since the last reset; zeroes them."""
        counts = tuple(int(c) for c in self._counts)
        self._counts[:] = 0
        return counts

    def reset(self) -> None:
        """Clear charges, queue, counters and clock; the network stays."""
        self.cycle = 0
        self._charge[:] = 0
        self._ring_w[:] = 0
        self._ring_t[:] = 0
        self._counts[:] = 0
        self._counting = False
        if self.trace is not None:
            self.trace = []

    def charge_of(self, neuron_id: int) -> int:
        return int(self._charge[self._index[neuron_id]])
