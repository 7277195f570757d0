"""Command-line front end: evolve, simulate, replay, sweep and validate."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .config import OPTIMIZER_CONTROLLER, ExperimentConfig, load_config
from .snn import NetworkValidationError, network_from_json, validate_network


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="experiment config JSON (defaults follow the "
                             "base parameter table)")
    parser.add_argument("--workers", type=int, default=None,
                        help="max concurrent fitness evaluations")


def _load(args, optimizer: str | None = None) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = ExperimentConfig()
    if optimizer is not None:
        config.optimizer = optimizer
        config.controller = OPTIMIZER_CONTROLLER[optimizer]
    if getattr(args, "workers", None) is not None:
        config.workers = args.workers
    if getattr(args, "train_seed", None) is not None:
        config.train_seed = args.train_seed
    if getattr(args, "horizon", None) is not None:
        config.horizon = args.horizon
    if getattr(args, "epochs", None) is not None:
        config.epochs = args.epochs
    if getattr(args, "population", None) is not None:
        config.population_size = args.population
        config.__post_init__()
    config.validate()
    return config


def _cmd_evolve(args, optimizer: str) -> int:
    from . import render
    config = _load(args, optimizer)
    outdir = Path(args.output) if args.output else Path(config.output_dir)
    seeds = args.seeds if args.seeds else [1]
    for seed in seeds:
        run_dir = outdir / f"seed_{seed}" if len(seeds) > 1 else outdir
        outcome = harness.run_experiment(
            config, seed, run_dir,
            resume=not args.fresh,
            target_fitness=args.target,
            max_epochs=args.max_epochs)
        render.render_training_curve(
            run_dir / "stats.csv", run_dir / "training_curve.png",
            title=f"{optimizer} seed {seed}")
        print(f"seed {seed}: {outcome.epochs_completed} epochs, "
              f"best circliness {outcome.best_raw:.4f} "
              f"-> {outcome.best_artifact_path}")
    return 0


def _cmd_simulate(args) -> int:
    config = _load(args)
    artifact = harness.load_artifact(args.artifact)
    seed = args.seed if args.seed is not None else config.train_seed
    value = harness.evaluate_fitness(artifact, config, seed)
    print(f"circliness(T={config.horizon}) = {value:.6f} "
          f"(spawn seed {seed})")
    return 0


def _cmd_replay(args) -> int:
    config = _load(args)
    artifact = harness.load_artifact(args.artifact)
    seed = args.seed if args.seed is not None else config.train_seed
    result = harness.replay(artifact, seed, config, args.output,
                            frames_every=args.frames_every)
    print(f"replayed {config.horizon} ticks, final circliness "
          f"{result.circliness:.6f} -> {args.output}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    artifact = harness.load_artifact(args.artifact)
    summary = harness.robustness_sweep(artifact, config, args.output,
                                       n_seeds=args.seeds)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_validate_net(args) -> int:
    try:
        network = network_from_json(Path(args.network).read_text())
    except NetworkValidationError as exc:
        for problem in exc.problems:
            print(f"INVALID: {problem}")
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"INVALID: {exc}")
        return 1
    problems = validate_network(network, require_io=True)
    if problems:
        for problem in problems:
            print(f"INVALID: {problem}")
        return 1
    print(f"OK: {len(network.neurons)} neurons, "
          f"{len(network.synapses)} synapses")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="millsim",
        description="Evolve and inspect milling controllers for binary-"
                    "sensing swarm agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, optimizer in (("evolve-snn", "eons"),
                            ("evolve-symbolic", "cmaes")):
        p = sub.add_parser(name, help=f"run the {optimizer} search")
        _add_common(p)
        p.add_argument("--seeds", type=int, nargs="+", default=None,
                       help="optimizer seeds (one run per seed)")
        p.add_argument("--train-seed", type=int, default=None,
                       help="fixed spawn seed used for every evaluation")
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--population", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--output", type=Path, default=None)
        p.add_argument("--target", type=float, default=None,
                       help="stop once best circliness reaches this value")
        p.add_argument("--max-epochs", type=int, default=None,
                       help="cap epochs for this invocation (resumable)")
        p.add_argument("--fresh", action="store_true",
                       help="ignore an existing checkpoint")
        p.set_defaults(func=lambda a, opt=optimizer: _cmd_evolve(a, opt))

    p = sub.add_parser("simulate", help="evaluate an artifact once")
    _add_common(p)
    p.add_argument("--artifact", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("replay",
                       help="re-run an artifact, logging traces and frames")
    _add_common(p)
    p.add_argument("--artifact", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--frames-every", type=int, default=None,
                   help="render a frame every M ticks")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("sweep",
                       help="evaluate an artifact across spawn seeds")
    _add_common(p)
    p.add_argument("--artifact", type=Path, required=True)
    p.add_argument("--seeds", type=int, default=100,
                   help="number of spawn seeds")
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate-net", help="check a network file")
    p.add_argument("network", type=Path)
    p.set_defaults(func=_cmd_validate_net)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
