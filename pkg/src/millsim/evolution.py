"""Evolutionary search over spiking-network structure and parameters:
seeded initialization, tournament selection, elitism, structural and
parametric mutation, crossover, random reseeding and size-penalized
fitness."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .snn import (DELAY_RANGE, LEAK_CHOICES, N_INPUTS, N_OUTPUTS,
                  THRESHOLD_RANGE, WEIGHT_RANGE, Network, Neuron, Synapse)

INPUT_IDS = tuple(range(N_INPUTS))
OUTPUT_IDS = tuple(range(N_INPUTS, N_INPUTS + N_OUTPUTS))

#: Attempts at sampling a fresh (source, target) pair before an add-edge
#: mutation gives up on a near-complete graph.
ADD_EDGE_TRIES = 32


@dataclass(frozen=True)
class EvolutionConfig:
    """Search hyperparameters; defaults follow the reference setup."""

    population_size: int = 100
    starting_nodes: int = 10
    starting_edges: int = 20
    crossover_rate: float = 0.5
    mutation_rate: float = 0.9
    add_node_rate: float = 0.55
    delete_node_rate: float = 0.45
    add_edge_rate: float = 0.6
    delete_edge_rate: float = 0.4
    tournament_size_factor: float = 0.1
    tournament_best_net_factor: float = 0.9
    random_factor: float = 0.10
    num_mutations: int = 3
    node_mutation_weights: dict = field(
        default_factory=lambda: {"threshold": 1.0})
    edge_mutation_weights: dict = field(
        default_factory=lambda: {"weight": 0.65, "delay": 0.35})
    num_best: int = 4
    size_penalty_alpha: float = 0.001

    def validate(self) -> None:
        problems = []
        if self.population_size < 1:
            problems.append("population_size must be >= 1")
        if abs(self.add_node_rate + self.delete_node_rate - 1.0) > 1e-12:
            problems.append("add_node_rate + delete_node_rate must sum to 1")
        if abs(self.add_edge_rate + self.delete_edge_rate - 1.0) > 1e-12:
            problems.append("add_edge_rate + delete_edge_rate must sum to 1")
        for name in ("crossover_rate", "mutation_rate",
                     "tournament_size_factor", "tournament_best_net_factor",
                     "random_factor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must be in [0, 1]")
        if self.num_mutations < 0 or self.num_best < 0:
            problems.append("num_mutations and num_best must be >= 0")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class ScoredGenome:
    """A network with its evaluated fitness and the size-penalized score
    used for ranking."""

    network: Network
    raw_fitness: float | None
    penalized_fitness: float


def score(network: Network, raw_fitness: float | None,
          alpha: float) -> ScoredGenome:
    """Apply the per-element size penalty; failed evaluations rank below
    everything."""
    if raw_fitness is None:
        return ScoredGenome(network, None, -math.inf)
    size = len(network.neurons) + len(network.synapses)
    return ScoredGenome(network, raw_fitness, raw_fitness - alpha * size)


def _random_neuron(nid: int, role: str, rng: random.Random) -> Neuron:
    return Neuron(nid,
                  threshold=rng.randint(*THRESHOLD_RANGE),
                  leak=rng.choice(LEAK_CHOICES),
                  axonal_delay=0,
                  role=role)


def _random_synapse(source: int, target: int, rng: random.Random) -> Synapse:
    return Synapse(source, target,
                   weight=rng.randint(*WEIGHT_RANGE),
                   delay=rng.randint(*DELAY_RANGE))


def random_genome(config: EvolutionConfig, rng: random.Random) -> Network:
    """One freshly initialized genome: fixed I/O neurons, floating hidden
    nodes, then random unique edges; all parameters uniform in range."""
    neurons = [_random_neuron(nid, "input", rng) for nid in INPUT_IDS]
    neurons += [_random_neuron(nid, "output", rng) for nid in OUTPUT_IDS]
    next_id = N_INPUTS + N_OUTPUTS
    for _ in range(config.starting_nodes):
        neurons.append(_random_neuron(next_id, "hidden", rng))
        next_id += 1
    ids = [n.id for n in neurons]
    synapses = []
    used = set()
    while len(synapses) < config.starting_edges:
        pair = (rng.choice(ids), rng.choice(ids))
        if pair in used:
            continue
        used.add(pair)
        synapses.append(_random_synapse(pair[0], pair[1], rng))
    return Network(neurons, synapses,
                   inputs=list(INPUT_IDS), outputs=list(OUTPUT_IDS))


def init_population(config: EvolutionConfig, seed: int) -> list[Network]:
    """Deterministic seeded population of population_size genomes."""
    config.validate()
    rng = random.Random(seed)
    return [random_genome(config, rng)
            for _ in range(config.population_size)]


def tournament_select(population: list[ScoredGenome],
                      config: EvolutionConfig,
                      rng: random.Random) -> ScoredGenome:
    """Sample ceil(tournament_size_factor * P) contenders without
    replacement; usually return the best, occasionally a random one."""
    # The 1e-9 slack keeps float fuzz (0.1 * 100 == 10.000000000000002)
    # from bumping an exact product up a slot.
    k = max(1, math.ceil(config.tournament_size_factor * len(population)
                         - 1e-9))
    k = min(k, len(population))
    contenders = rng.sample(population, k)
    if rng.random() < config.tournament_best_net_factor:
        return max(contenders, key=lambda g: g.penalized_fitness)
    return rng.choice(contenders)


def _mutate_parameter(net: Network, config: EvolutionConfig,
                      rng: random.Random) -> None:
    pool_size = len(net.neurons) + len(net.synapses)
    if pool_size == 0:
        return
    pick = rng.randrange(pool_size)
    if pick < len(net.neurons):
        # node parameters: threshold is the only mutable one
        net.neurons[pick].threshold = rng.randint(*THRESHOLD_RANGE)
    else:
        syn = net.synapses[pick - len(net.neurons)]
        weights = config.edge_mutation_weights
        if rng.random() < weights["weight"] / (weights["weight"]
                                               + weights["delay"]):
            syn.weight = rng.randint(*WEIGHT_RANGE)
        else:
            syn.delay = rng.randint(*DELAY_RANGE)


def _mutate_structure(net: Network, config: EvolutionConfig,
                      rng: random.Random) -> None:
    if rng.random() < 0.5:  # node operation
        if rng.random() < config.add_node_rate:
            nid = max(n.id for n in net.neurons) + 1
            net.neurons.append(_random_neuron(nid, "hidden", rng))
        else:
            hidden = [i for i, n in enumerate(net.neurons)
                      if n.role == "hidden"]
            if not hidden:
                return  # I/O neurons are protected; nothing deletable
            victim = net.neurons.pop(rng.choice(hidden))
            net.synapses = [s for s in net.synapses
                            if s.source != victim.id
                            and s.target != victim.id]
    else:  # edge operation
        if rng.random() < config.add_edge_rate:
            ids = [n.id for n in net.neurons]
            used = {(s.source, s.target) for s in net.synapses}
            for _ in range(ADD_EDGE_TRIES):
                pair = (rng.choice(ids), rng.choice(ids))
                if pair not in used:
                    net.synapses.append(
                        _random_synapse(pair[0], pair[1], rng))
                    return
        else:
            if net.synapses:
                net.synapses.pop(rng.randrange(len(net.synapses)))


def mutate(genome: Network, config: EvolutionConfig,
           rng: random.Random) -> Network:
    """num_mutations independent draws, each parametric with probability
    mutation_rate and structural otherwise; returns a new genome."""
    net = genome.copy()
    for _ in range(config.num_mutations):
        if rng.random() < config.mutation_rate:
            _mutate_parameter(net, config, rng)
        else:
            _mutate_structure(net, config, rng)
    return net


def crossover(parent_a: Network, parent_b: Network,
              rng: random.Random) -> Network:
    """Blend two genomes keyed by element identity.

    I/O neurons are always inherited. Hidden neurons (by id) and synapses
    (by endpoint pair) present in both parents are always inherited,
    taking either parent's parameters; elements unique to one parent are
    inherited with probability 0.5. Synapses survive only when both
    endpoints do.
    """
    a_neurons = {n.id: n for n in parent_a.neurons}
    b_neurons = {n.id: n for n in parent_b.neurons}
    neurons: list[Neuron] = []
    for nid in sorted(set(a_neurons) | set(b_neurons)):
        in_a, in_b = nid in a_neurons, nid in b_neurons
        if in_a and in_b:
            donor = a_neurons[nid] if rng.random() < 0.5 else b_neurons[nid]
        else:
            donor = a_neurons[nid] if in_a else b_neurons[nid]
            if donor.role == "hidden" and rng.random() >= 0.5:
                continue
        neurons.append(replace(donor))
    kept = {n.id for n in neurons}
    a_syn = {(s.source, s.target): s for s in parent_a.synapses}
    b_syn = {(s.source, s.target): s for s in parent_b.synapses}
    synapses: list[Synapse] = []
    for key in sorted(set(a_syn) | set(b_syn)):
        if key[0] not in kept or key[1] not in kept:
            continue
        in_a, in_b = key in a_syn, key in b_syn
        if in_a and in_b:
            donor = a_syn[key] if rng.random() < 0.5 else b_syn[key]
        else:
            donor = a_syn[key] if in_a else b_syn[key]
            if rng.random() >= 0.5:
                continue
        synapses.append(replace(donor))
    return Network(neurons, synapses,
                   inputs=list(parent_a.inputs),
                   outputs=list(parent_a.outputs))


def next_generation(scored: list[ScoredGenome], config: EvolutionConfig,
                    rng: random.Random) -> list[Network]:
    """Produce the next population: elites copied verbatim, a fresh random
    slice, and the remainder bred by tournament + crossover + mutation.

    Returns networks in order: elites first, then fresh genomes, then
    children; size always equals population_size.
    """
    pop_size = config.population_size
    if len(scored) != pop_size:
        raise ValueError(f"expected {pop_size} scored genomes, "
                         f"got {len(scored)}")
    ranked = sorted(range(pop_size),
                    key=lambda i: (-scored[i].penalized_fitness, i))
    elites = [scored[i].network.copy() for i in ranked[:config.num_best]]
    n_fresh = int(config.random_factor * pop_size + 1e-9)
    fresh = [random_genome(config, rng) for _ in range(n_fresh)]
    children = []
    for _ in range(pop_size - len(elites) - len(fresh)):
        parent = tournament_select(scored, config, rng)
        if rng.random() < config.crossover_rate:
            other = tournament_select(scored, config, rng)
            child = crossover(parent.network, other.network, rng)
        else:
            child = parent.network.copy()
        children.append(mutate(child, config, rng))
    return elites + fresh + children
