"""Experiment orchestration: the milling fitness function, parallel
population evaluation, optimizer drivers with resumable checkpoints, and
trace/frame/report emission."""
from __future__ import annotations

import csv
import json
import logging
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cmaes, evolution
from .config import ExperimentConfig
from .controllers import SymbolicParams, make_controller
from .metrics import CirclinessTracker, SwarmSnapshot, phi_tau
from .snn import Network, network_from_dict, network_to_dict
from .world import WorldState, sense_all, spawn, step_kinematics

log = logging.getLogger(__name__)

STATS_COLUMNS = ["epoch", "best_raw", "best_penalized", "best_so_far",
                 "mean_raw", "min_raw", "max_raw", "neuron_count",
                 "synapse_count", "epoch_seconds", "total_seconds"]
CMA_EXTRA_COLUMNS = ["v_a", "v_b", "omega_a", "omega_b"]

#: Columns whose values are wall-clock timing and therefore excluded from
#: byte-for-byte determinism comparisons.
TIMING_COLUMNS = ("epoch_seconds", "total_seconds")


# ---------------------------------------------------------------------------
# Simulation and fitness
# ---------------------------------------------------------------------------

@dataclass
class TickRecord:
    """One tick of an instrumented simulation."""

    tick: int
    agents: list[dict]
    sensors: list[int]
    phi: float | None
    tau: float | None
    circliness: float | None


@dataclass
class SimResult:
    circliness: float
    final_world: WorldState
    records: list[TickRecord] | None = None


def _snapshot(world: WorldState) -> SwarmSnapshot:
    return SwarmSnapshot(tuple((a.x, a.y) for a in world.agents),
                         tuple(a.theta for a in world.agents))


def _tick_record(world: WorldState, sensors: list[int],
                 phi: float | None, tau: float | None,
                 lam: float | None) -> TickRecord:
    agents = [{"x": a.x, "y": a.y, "theta": a.theta,
               "v": a.v, "omega": a.omega, "sensor": s}
              for a, s in zip(world.agents, sensors)]
    return TickRecord(world.tick, agents, sensors, phi, tau, lam)


def run_simulation(world: WorldState,
                   artifact: SymbolicParams | Network,
                   config: ExperimentConfig,
                   record: bool = False) -> SimResult:
    """Run the observe-act loop for `horizon` ticks from a given state.

    Every agent runs an independent copy of the same controller artifact.
    Commands computed from the sensor reading at tick k are applied on
    tick k+1; tick 0 issues (0, 0) since no reading precedes it. Sensing
    happens on the post-collision state of each tick.
    """
    wcfg = config.world
    n = len(world.agents)
    controllers = [make_controller(artifact, wcfg) for _ in range(n)]
    tracker = CirclinessTracker(config.window)
    sensors = sense_all(world, wcfg)
    commands: list[tuple[float, float]] = [(0.0, 0.0)] * n
    records: list[TickRecord] | None = None
    if record:
        records = [_tick_record(world, sensors, None, None, None)]
    lam = None
    for _ in range(config.horizon):
        next_commands = [controllers[i].next_command(sensors[i])
                         for i in range(n)]
        world = step_kinematics(world, commands, wcfg)
        phi, tau = phi_tau(_snapshot(world))
        lam = tracker.push_values(phi, tau)
        sensors = sense_all(world, wcfg)
        commands = next_commands
        if records is not None:
            records.append(_tick_record(world, sensors, phi, tau, lam))
    if lam is None:  # unreachable when window <= horizon (validated)
        raise RuntimeError("horizon shorter than the metric window")
    return SimResult(lam, world, records)


def evaluate_fitness(artifact: SymbolicParams | Network,
                     config: ExperimentConfig,
                     spawn_seed: int) -> float:
    """Final circliness of one seeded simulation; fully deterministic."""
    world = spawn(config.world, spawn_seed)
    return run_simulation(world, artifact, config).circliness


@dataclass
class EvalResult:
    fitness: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _evaluate_job(job: tuple) -> tuple[float | None, str | None]:
    artifact_doc, kind, config, spawn_seed = job
    try:
        if kind == "snn":
            artifact = network_from_dict(artifact_doc)
        else:
            artifact = SymbolicParams(**artifact_doc)
        return evaluate_fitness(artifact, config, spawn_seed), None
    except Exception as exc:  # per-slot failures must not sink the batch
        return None, f"{type(exc).__name__}: {exc}"


def _job_for(artifact, config, seed) -> tuple:
    if isinstance(artifact, Network):
        return (network_to_dict(artifact), "snn", config, seed)
    return ({"v_a": artifact.v_a, "v_b": artifact.v_b,
             "omega_a": artifact.omega_a, "omega_b": artifact.omega_b},
            "symbolic", config, seed)


def evaluate_batch(jobs: list[tuple], config: ExperimentConfig,
                   workers: int | None = None) -> list[EvalResult]:
    """Evaluate (artifact, spawn_seed) jobs, preserving input order.

    Results are independent of worker count and scheduling; failures are
    captured per slot.
    """
    workers = config.workers if workers is None else workers
    payload = [_job_for(artifact, config, seed) for artifact, seed in jobs]
    if workers <= 1 or len(payload) <= 1:
        raw = [_evaluate_job(job) for job in payload]
    else:
        from ._kernels import warmup
        warmup()  # compile before forking so workers inherit the kernel
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_evaluate_job, payload))
    return [EvalResult(fitness, error) for fitness, error in raw]


def evaluate_population(artifacts: list, config: ExperimentConfig,
                        spawn_seed: int | None = None,
                        workers: int | None = None) -> list[EvalResult]:
    """Evaluate a population on one fixed spawn seed (the training seed by
    default), order-stable and at most `workers` at a time."""
    seed = config.train_seed if spawn_seed is None else spawn_seed
    return evaluate_batch([(a, seed) for a in artifacts], config, workers)


# ---------------------------------------------------------------------------
# Stats CSV and checkpointing
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class StatsWriter:
    """Append-only per-epoch stats CSV."""

    def __init__(self, path: Path, columns: list[str]):
        self.path = path
        self.columns = columns
        if not path.exists():
            with path.open("w", newline="") as fh:
                csv.writer(fh).writerow(columns)

    def append(self, row: dict) -> None:
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow(
                [_format_value(row.get(c)) for c in self.columns])


def read_stats(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def stats_without_timing(path: str | Path) -> list[tuple]:
    """Stats rows with wall-clock columns dropped, for determinism
    comparisons."""
    rows = []
    for row in read_stats(path):
        rows.append(tuple(v for k, v in row.items()
                          if k not in TIMING_COLUMNS))
    return rows


def _random_state_to_json(rng: random.Random) -> list:
    version, internal, gauss = rng.getstate()
    return [version, list(internal), gauss]


def _random_state_from_json(doc: list) -> random.Random:
    rng = random.Random()
    rng.setstate((doc[0], tuple(doc[1]), doc[2]))
    return rng


# ---------------------------------------------------------------------------
# Optimizer drivers
# ---------------------------------------------------------------------------

@dataclass
class ExperimentOutcome:
    output_dir: Path
    epochs_completed: int
    best_raw: float
    best_penalized: float
    best_artifact_path: Path
    terminated_early: bool = False


def run_experiment(config: ExperimentConfig, optimizer_seed: int,
                   output_dir: str | Path | None = None,
                   resume: bool = True,
                   target_fitness: float | None = None,
                   max_epochs: int | None = None) -> ExperimentOutcome:
    """Drive the configured optimizer, writing per-epoch stats, best-so-far
    artifacts and a resumable checkpoint into the output directory.

    `target_fitness` stops the search once the best raw circliness reaches
    it; `max_epochs` caps this invocation below config.epochs.
    """
    config.validate()
    outdir = Path(output_dir if output_dir is not None else config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(config.to_json() + "\n")
    if config.optimizer == "cmaes":
        return _run_cmaes(config, optimizer_seed, outdir, resume,
                          target_fitness, max_epochs)
    return _run_eons(config, optimizer_seed, outdir, resume,
                     target_fitness, max_epochs)


def _load_checkpoint(path: Path, optimizer: str, seed: int) -> dict | None:
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    if doc.get("optimizer") != optimizer or doc.get("seed") != seed:
        raise ValueError(
            f"checkpoint at {path} belongs to a different run "
            f"({doc.get('optimizer')!r}, seed {doc.get('seed')!r})")
    return doc


def _epoch_stats(fits: list[float | None]) -> tuple:
    valid = [f for f in fits if f is not None]
    if not valid:
        return None, None, None
    return (sum(valid) / len(valid), min(valid), max(valid))


def _run_eons(config: ExperimentConfig, seed: int, outdir: Path,
              resume: bool, target: float | None,
              max_epochs: int | None) -> ExperimentOutcome:
    evo = config.evolution
    stats = StatsWriter(outdir / "stats.csv", STATS_COLUMNS)
    best_dir = outdir / "best"
    best_dir.mkdir(exist_ok=True)
    ckpt_path = outdir / "checkpoint.json"
    ckpt = _load_checkpoint(ckpt_path, "eons", seed) if resume else None

    if ckpt is None:
        rng = random.Random(seed)
        init_seed = rng.getrandbits(63)
        population = evolution.init_population(evo, init_seed)
        known: list[float | None] = [None] * evo.population_size
        start_epoch = 0
        best_pen = -math.inf
        best_raw = -math.inf
        prior_seconds = 0.0
    else:
        rng = _random_state_from_json(ckpt["rng_state"])
        scored = [evolution.score(network_from_dict(g["network"]),
                                  g["raw_fitness"], evo.size_penalty_alpha)
                  for g in ckpt["population"]]
        population = evolution.next_generation(scored, evo, rng)
        known = [scored_elite.raw_fitness for scored_elite in sorted(
            scored, key=lambda g: -g.penalized_fitness)[:evo.num_best]]
        known += [None] * (evo.population_size - evo.num_best)
        start_epoch = ckpt["epoch"] + 1
        best_pen = ckpt["best_penalized"]
        best_raw = ckpt["best_raw"]
        prior_seconds = ckpt["total_seconds"]

    end_epoch = config.epochs
    if max_epochs is not None:
        end_epoch = min(end_epoch, start_epoch + max_epochs)
    total_seconds = prior_seconds
    epochs_completed = start_epoch
    stopped = False
    for epoch in range(start_epoch, end_epoch):
        t0 = time.perf_counter()
        todo = [i for i, f in enumerate(known) if f is None]
        results = evaluate_population([population[i] for i in todo], config)
        for i, res in zip(todo, results):
            if not res.ok:
                log.warning("evaluation %d failed: %s", i, res.error)
            known[i] = res.fitness
        scored = [evolution.score(population[i], known[i],
                                  evo.size_penalty_alpha)
                  for i in range(evo.population_size)]
        top = max(scored, key=lambda g: g.penalized_fitness)
        if top.penalized_fitness > best_pen:
            best_pen = top.penalized_fitness
            best_raw = top.raw_fitness
            doc = {"kind": "snn", "raw_fitness": top.raw_fitness,
                   "penalized_fitness": top.penalized_fitness,
                   "epoch": epoch,
                   "network": network_to_dict(top.network)}
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            (best_dir / f"epoch_{epoch:05d}.json").write_text(text)
            (outdir / "best.json").write_text(text)
        epoch_seconds = time.perf_counter() - t0
        total_seconds += epoch_seconds
        mean_raw, min_raw, max_raw = _epoch_stats(known)
        stats.append({
            "epoch": epoch,
            "best_raw": top.raw_fitness,
            "best_penalized": top.penalized_fitness,
            "best_so_far": best_pen,
            "mean_raw": mean_raw, "min_raw": min_raw, "max_raw": max_raw,
            "neuron_count": len(top.network.neurons),
            "synapse_count": len(top.network.synapses),
            "epoch_seconds": epoch_seconds,
            "total_seconds": total_seconds,
        })
        ckpt_doc = {
            "optimizer": "eons", "seed": seed, "epoch": epoch,
            "rng_state": _random_state_to_json(rng),
            "best_penalized": best_pen, "best_raw": best_raw,
            "total_seconds": total_seconds,
            "population": [{"network": network_to_dict(g.network),
                            "raw_fitness": g.raw_fitness}
                           for g in scored],
        }
        _write_checkpoint(ckpt_path, ckpt_doc)
        epochs_completed = epoch + 1
        if target is not None and best_raw >= target:
            stopped = True
            break
        population = evolution.next_generation(scored, evo, rng)
        elite_raw = [g.raw_fitness for g in sorted(
            scored, key=lambda g: -g.penalized_fitness)[:evo.num_best]]
        known = elite_raw + [None] * (evo.population_size - evo.num_best)
    return ExperimentOutcome(outdir, epochs_completed, best_raw, best_pen,
                             outdir / "best.json", stopped)


def _run_cmaes(config: ExperimentConfig, seed: int, outdir: Path,
               resume: bool, target: float | None,
               max_epochs: int | None) -> ExperimentOutcome:
    stats = StatsWriter(outdir / "stats.csv",
                        STATS_COLUMNS + CMA_EXTRA_COLUMNS)
    best_dir = outdir / "best"
    best_dir.mkdir(exist_ok=True)
    ckpt_path = outdir / "checkpoint.json"
    ckpt = _load_checkpoint(ckpt_path, "cmaes", seed) if resume else None

    rng = np.random.default_rng(seed)
    if ckpt is None:
        state = cmaes.cma_init(config.population_size)
        start_epoch = 0
        best_raw = -math.inf
        best_params: SymbolicParams | None = None
        prior_seconds = 0.0
    else:
        state = cmaes.CmaState.from_dict(ckpt["state"])
        rng.bit_generator.state = ckpt["rng_state"]
        start_epoch = ckpt["epoch"] + 1
        best_raw = ckpt["best_raw"]
        best_params = (SymbolicParams(**ckpt["best_params"])
                       if ckpt["best_params"] else None)
        prior_seconds = ckpt["total_seconds"]

    end_epoch = config.epochs
    if max_epochs is not None:
        end_epoch = min(end_epoch, start_epoch + max_epochs)
    total_seconds = prior_seconds
    epochs_completed = start_epoch
    stopped = False
    for epoch in range(start_epoch, end_epoch):
        if state.terminated:
            log.info("CMA-ES terminated by condition number %.3g at "
                     "epoch %d", state.condition_number, epoch)
            stopped = True
            break
        t0 = time.perf_counter()
        raw_candidates = cmaes.ask(state, rng)
        clipped = np.clip(raw_candidates, 0.0, 1.0)
        params = [cmaes.discretize(c, config.world) for c in clipped]
        results = evaluate_population(params, config)
        fits: list[float] = []
        for i, res in enumerate(results):
            if not res.ok:
                log.warning("evaluation %d failed: %s", i, res.error)
            # failed slots rank below every true circliness value
            fits.append(res.fitness if res.ok else -1.0)
        cmaes.tell(state, raw_candidates, fits)
        top_i = max(range(len(fits)), key=lambda i: fits[i])
        if fits[top_i] > best_raw:
            best_raw = fits[top_i]
            best_params = params[top_i]
            doc = {"kind": "symbolic", "raw_fitness": best_raw,
                   "epoch": epoch,
                   "params": {"v_a": best_params.v_a,
                              "v_b": best_params.v_b,
                              "omega_a": best_params.omega_a,
                              "omega_b": best_params.omega_b}}
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            (best_dir / f"epoch_{epoch:05d}.json").write_text(text)
            (outdir / "best.json").write_text(text)
        epoch_seconds = time.perf_counter() - t0
        total_seconds += epoch_seconds
        mean_raw, min_raw, max_raw = _epoch_stats(fits)
        stats.append({
            "epoch": epoch,
            "best_raw": fits[top_i],
            "best_penalized": fits[top_i],
            "best_so_far": best_raw,
            "mean_raw": mean_raw, "min_raw": min_raw, "max_raw": max_raw,
            "neuron_count": None, "synapse_count": None,
            "epoch_seconds": epoch_seconds,
            "total_seconds": total_seconds,
            "v_a": best_params.v_a, "v_b": best_params.v_b,
            "omega_a": best_params.omega_a, "omega_b": best_params.omega_b,
        })
        ckpt_doc = {
            "optimizer": "cmaes", "seed": seed, "epoch": epoch,
            "rng_state": _np_state_to_json(rng),
            "state": state.to_dict(),
            "best_raw": best_raw,
            "best_params": ({"v_a": best_params.v_a, "v_b": best_params.v_b,
                             "omega_a": best_params.omega_a,
                             "omega_b": best_params.omega_b}
                            if best_params else None),
            "total_seconds": total_seconds,
        }
        _write_checkpoint(ckpt_path, ckpt_doc)
        epochs_completed = epoch + 1
        if target is not None and best_raw >= target:
            stopped = True
            break
    return ExperimentOutcome(outdir, epochs_completed, best_raw, best_raw,
                             outdir / "best.json", stopped)


def _np_state_to_json(rng: np.random.Generator) -> dict:
    return json.loads(json.dumps(rng.bit_generator.state))


def _write_checkpoint(path: Path, doc: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True))
    tmp.replace(path)


def load_artifact(path: str | Path) -> SymbolicParams | Network:
    """Load a saved best artifact (or bare network / params file)."""
    doc = json.loads(Path(path).read_text())
    if "network" in doc:
        return network_from_dict(doc["network"])
    if "params" in doc:
        return SymbolicParams(**doc["params"])
    if "neurons" in doc:
        return network_from_dict(doc)
    if {"v_a", "v_b", "omega_a", "omega_b"} <= set(doc):
        return SymbolicParams(doc["v_a"], doc["v_b"],
                              doc["omega_a"], doc["omega_b"])
    raise ValueError(f"unrecognized artifact file: {path}")


# ---------------------------------------------------------------------------
# Replay and robustness sweep
# ---------------------------------------------------------------------------

def replay(artifact: SymbolicParams | Network, spawn_seed: int,
           config: ExperimentConfig, output_dir: str | Path,
           frames_every: int | None = None) -> SimResult:
    """Re-run one simulation, emitting per-tick snapshots (JSON lines),
    per-tick metric rows (CSV) and optional rendered frames."""
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    world = spawn(config.world, spawn_seed)
    result = run_simulation(world, artifact, config, record=True)
    assert result.records is not None
    with (outdir / "trajectory.jsonl").open("w") as fh:
        for rec in result.records:
            fh.write(json.dumps({"tick": rec.tick, "agents": rec.agents},
                                sort_keys=True) + "\n")
    with (outdir / "metrics.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "phi", "tau", "lambda"])
        for rec in result.records[1:]:
            writer.writerow([rec.tick, _format_value(rec.phi),
                             _format_value(rec.tau),
                             _format_value(rec.circliness)])
    summary = {"circliness": result.circliness, "spawn_seed": spawn_seed,
               "horizon": config.horizon, "window": config.window}
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if frames_every is not None:
        from . import render
        frame_dir = outdir / "frames"
        frame_dir.mkdir(exist_ok=True)
        for rec in result.records:
            if rec.tick % frames_every == 0 and rec.tick < config.horizon:
                render.render_frame(
                    rec.agents, config.world,
                    frame_dir / f"tick_{rec.tick:06d}.png",
                    tick=rec.tick, circliness=rec.circliness)
    return result


def sweep_seeds(train_seed: int, count: int) -> list[int]:
    """The robustness-sweep spawn seeds: the training seed first, then the
    following distinct seeds."""
    return [train_seed + i for i in range(count)]


def robustness_sweep(artifact: SymbolicParams | Network,
                     config: ExperimentConfig,
                     output_dir: str | Path,
                     n_seeds: int = 100,
                     workers: int | None = None) -> dict:
    """Evaluate one artifact across spawn seeds and summarize the
    circliness distribution (training seed is row 0)."""
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = sweep_seeds(config.train_seed, n_seeds)
    results = evaluate_batch([(artifact, s) for s in seeds], config, workers)
    values = []
    with (outdir / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "spawn_seed", "circliness"])
        for row, (seed, res) in enumerate(zip(seeds, results)):
            writer.writerow([row, seed, _format_value(res.fitness)])
            if res.ok:
                values.append(res.fitness)
    summary = {
        "count": len(values),
        "mean": sum(values) / len(values) if values else None,
        "min": min(values) if values else None,
        "max": max(values) if values else None,
        "train_seed_circliness": results[0].fitness,
        "seeds": len(seeds),
    }
    (outdir / "sweep_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    try:
        from . import render
        render.render_sweep_violin(values, outdir / "sweep_violin.png")
    except Exception as exc:  # rendering must not sink the sweep data
        log.warning("violin rendering failed: %s", exc)
    return summary
