"""millsim: a deterministic 2D swarm-milling lab.

Binary-sensing unicycle agents are driven by either a 4-parameter symbolic
controller or an evolved integer spiking network; both are searched to
maximize the rolling circliness score of the swarm.
"""
from .cmaes import CmaState, ask, cma_init, discretize, tell
from .config import ExperimentConfig, load_config, save_config
from .controllers import SymbolicParams, make_controller, symbolic_next
from .evolution import (EvolutionConfig, ScoredGenome, crossover,
                        init_population, mutate, next_generation,
                        tournament_select)
from .harness import (evaluate_fitness, evaluate_population, replay,
                      robustness_sweep, run_experiment, run_simulation)
from .metrics import (CirclinessTracker, SwarmSnapshot, fatness, phi_tau,
                      tangentness)
from .snn import (CaspianProcessor, Network, NetworkValidationError, Neuron,
                  Synapse, network_from_json, network_to_json,
                  validate_network)
from .world import (AgentState, SpawnInfeasibleError, WorldConfig,
                    WorldState, resolve_collisions, sense, spawn,
                    step_kinematics)

__version__ = "0.1.0"
