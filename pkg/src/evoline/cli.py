"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 environment error (unreachable
evaluator, missing or incompatible run directory, unwritable path),
4 run aborted.  Log verbosity comes from the EVOLINE_LOG environment
variable (error/warn/info/debug); logs go to stderr, data to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import runlog
from .de import DEConfig, evolve
from .errors import (
    DegeneratePopulationError,
    EvolineError,
    RunAbortError,
    RunLogError,
    SpaceError,
    SpawnError,
)
from .fitness import SurrogateEvaluator, rastrigin_evaluator, sphere_evaluator
from .ga import GAConfig, evolve_ga
from .hyperspace import BoxSpace, default_space, dump_space, load_space
from .workerproto import WorkerPolicy, WorkerPoolEvaluator

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3
EXIT_ABORT = 4

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

# Built-in defaults; a config file overrides these, flags override both.
DEFAULTS = {
    "algorithm": "de",
    "evaluator": "surrogate",
    "space": None,
    "seed": 0,
    "population_size": None,  # depends on algorithm: DE 10, GA 15
    "max_generations": 10,
    "scale_factor": 0.6,
    "crossover_rate": 0.9,
    "mutation_scheme": "standard_rand1",
    "mutation_prob": 0.1,
    "tournament_size": 3,
    "elitism_count": 1,
    "epochs": 1,
    "parallel": 1,
    "timeout_secs": 600.0,
    "max_restarts": 2,
    "dims": 10,
    "surrogate_seed": 0,
    "cache": "auto",
}


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("EVOLINE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoline",
        description="Evolutionary hyperparameter search over mixed categorical/ordinal spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("space-init", help="write the default space document for editing")
    p_init.add_argument("out", help="destination path for the space document")
    p_init.add_argument("--force", action="store_true", help="overwrite an existing file")

    p_opt = sub.add_parser("optimize", help="run an optimization")
    p_opt.add_argument("--algo", choices=("de", "ga"), default=None,
                       help="search algorithm (default: de)")
    p_opt.add_argument("--space", default=None, help="space document path (default: built-in space)")
    p_opt.add_argument("--evaluator", default=None,
                       help="surrogate | sphere | rastrigin | worker:<command> (default: surrogate)")
    p_opt.add_argument("--out", required=True, help="run directory")
    p_opt.add_argument("--seed", type=int, default=None, help="run seed (default: 0)")
    p_opt.add_argument("--pop", type=int, default=None,
                       help="population size (default: 10 for de, 15 for ga)")
    p_opt.add_argument("--gens", type=int, default=None, help="generations (default: 10)")
    p_opt.add_argument("--f", type=float, default=None, help="DE scale factor in (0,1] (default: 0.6)")
    p_opt.add_argument("--cr", type=float, default=None,
                       help="DE crossover rate / GA crossover probability (default: 0.9)")
    p_opt.add_argument("--scheme", choices=("standard_rand1", "layerwise"), default=None,
                       help="DE mutation scheme (default: standard_rand1)")
    p_opt.add_argument("--mutation-prob", type=float, default=None,
                       help="GA per-gene mutation probability (default: 0.1)")
    p_opt.add_argument("--tournament", type=int, default=None,
                       help="GA tournament size (default: 3)")
    p_opt.add_argument("--elitism", type=int, default=None, help="GA elite count (default: 1)")
    p_opt.add_argument("--epochs", type=int, default=None,
                       help="training epochs per evaluation (default: 1)")
    p_opt.add_argument("--parallel", type=int, default=None,
                       help="parallel evaluations / worker processes (default: 1)")
    p_opt.add_argument("--timeout", type=float, default=None,
                       help="seconds to wait for one worker evaluation (default: 600)")
    p_opt.add_argument("--max-restarts", type=int, default=None,
                       help="worker restarts before giving up (default: 2)")
    p_opt.add_argument("--dims", type=int, default=None,
                       help="dimension for sphere/rastrigin (default: 10)")
    p_opt.add_argument("--surrogate-seed", type=int, default=None,
                       help="seed fixing the surrogate's hidden optimum (default: 0)")
    p_opt.add_argument("--no-cache", action="store_true",
                       help="disable evaluation caching even for deterministic evaluators")
    p_opt.add_argument("--resume", action="store_true",
                       help="continue an interrupted run from its directory (uses the stored config)")
    p_opt.add_argument("--config", default=None, help="JSON config file (same schema as config.json)")

    p_rep = sub.add_parser("report", help="emit the report bundle for a finished run")
    p_rep.add_argument("run_dir", help="completed run directory")
    p_rep.add_argument("--out", default=None, help="output directory (default: <run_dir>/report)")

    p_cmp = sub.add_parser("compare", help="tabulate several runs or run groups")
    p_cmp.add_argument("run_dirs", nargs="+", help="run directories (or directories of runs)")
    p_cmp.add_argument("--out", required=True, help="output directory for the comparison table")

    p_bench = sub.add_parser("bench", help="run DE on a continuous benchmark function")
    p_bench.add_argument("--fn", choices=("sphere", "rastrigin"), default="sphere")
    p_bench.add_argument("--dims", type=int, default=10)
    p_bench.add_argument("--pop", type=int, default=20)
    p_bench.add_argument("--gens", type=int, default=200)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--f", type=float, default=0.6)
    p_bench.add_argument("--cr", type=float, default=0.9)
    return parser


def cmd_space_init(args, parser) -> int:
    out = Path(args.out)
    if out.exists() and not args.force:
        print(f"error: {out} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_ENVIRONMENT
    out.write_text(dump_space(default_space()), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def _merge_settings(args, parser) -> dict:
    settings = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            parser.error(f"config file {path} does not exist")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            parser.error(f"config file {path}: {exc}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            parser.error(f"config file {path}: unknown keys {sorted(unknown)}")
        settings.update(file_cfg)
    flag_map = {
        "algorithm": args.algo, "space": args.space, "evaluator": args.evaluator,
        "seed": args.seed, "population_size": args.pop, "max_generations": args.gens,
        "scale_factor": args.f, "crossover_rate": args.cr, "mutation_scheme": args.scheme,
        "mutation_prob": args.mutation_prob, "tournament_size": args.tournament,
        "elitism_count": args.elitism, "epochs": args.epochs, "parallel": args.parallel,
        "timeout_secs": args.timeout, "max_restarts": args.max_restarts,
        "dims": args.dims, "surrogate_seed": args.surrogate_seed,
    }
    settings.update({k: v for k, v in flag_map.items() if v is not None})
    if args.no_cache:
        settings["cache"] = "off"
    if settings["population_size"] is None:
        settings["population_size"] = 10 if settings["algorithm"] == "de" else 15
    return settings


def _build_space(settings, parser):
    evaluator = settings["evaluator"]
    if evaluator in ("sphere", "rastrigin"):
        if settings["dims"] < 1:
            parser.error("--dims must be >= 1")
        return BoxSpace.cube(settings["dims"])
    if settings["space"]:
        path = Path(settings["space"])
        if not path.exists():
            raise SpaceError(f"space document {path} does not exist")
        return load_space(path.read_text(encoding="utf-8"))
    return default_space()


def _build_evaluator(settings, space):
    selector = settings["evaluator"]
    if selector == "surrogate":
        return SurrogateEvaluator(space, settings["surrogate_seed"])
    if selector == "sphere":
        return sphere_evaluator()
    if selector == "rastrigin":
        return rastrigin_evaluator()
    if selector.startswith("worker:"):
        policy = WorkerPolicy(
            timeout_secs=settings["timeout_secs"],
            max_restarts=settings["max_restarts"],
            parallel_workers=settings["parallel"],
        )
        return WorkerPoolEvaluator(selector[len("worker:"):], policy)
    raise ValueError(f"unknown evaluator {selector!r}")


def _build_engine_config(settings, parser):
    try:
        if settings["algorithm"] == "de":
            return DEConfig(
                population_size=settings["population_size"],
                max_generations=settings["max_generations"],
                scale_factor=settings["scale_factor"],
                crossover_rate=settings["crossover_rate"],
                mutation_scheme=settings["mutation_scheme"],
                seed=settings["seed"],
            )
        return GAConfig(
            population_size=settings["population_size"],
            max_generations=settings["max_generations"],
            crossover_prob=settings["crossover_rate"],
            mutation_prob=settings["mutation_prob"],
            tournament_size=settings["tournament_size"],
            elitism_count=settings["elitism_count"],
            seed=settings["seed"],
        )
    except ValueError as exc:
        parser.error(str(exc))


def cmd_optimize(args, parser) -> int:
    out_dir = Path(args.out)
    if args.resume:
        config_path = out_dir / "config.json"
        if not config_path.exists():
            raise RunLogError(f"{out_dir} has no config.json to resume from")
        settings = dict(DEFAULTS)
        settings.update(json.loads(config_path.read_text(encoding="utf-8")))
        if settings["population_size"] is None:
            settings["population_size"] = 10 if settings["algorithm"] == "de" else 15
        space = runlog.space_from_snapshot(
            json.loads((out_dir / "space.json").read_text(encoding="utf-8")))
    else:
        settings = _merge_settings(args, parser)
        space = _build_space(settings, parser)

    cfg = _build_engine_config(settings, parser)
    evaluator = _build_evaluator(settings, space)
    run = runlog.RunLog.open_run(out_dir, settings, runlog.space_snapshot(space))

    def printer(record):
        print(f"generation {record.generation}: best={record.best_fitness:.6f} "
              f"mean={record.mean_fitness:.6f} evals={record.evals}", flush=True)

    use_cache = None if settings["cache"] == "auto" else False
    try:
        if settings["algorithm"] == "de":
            result = evolve(space, cfg, evaluator, run, epochs=settings["epochs"],
                            parallelism=settings["parallel"], on_generation=printer,
                            use_cache=use_cache)
        else:
            result = evolve_ga(space, cfg, evaluator, run, epochs=settings["epochs"],
                               parallelism=settings["parallel"], on_generation=printer,
                               use_cache=use_cache)
    finally:
        if hasattr(evaluator, "shutdown"):
            evaluator.shutdown()
    print(f"best fitness {result.best.fitness:.6f} after "
          f"{result.stats['evaluations']} evaluations; run saved to {out_dir}")
    return EXIT_OK


def cmd_report(args, parser) -> int:
    out = Path(args.out) if args.out else Path(args.run_dir) / "report"
    written = runlog.report(args.run_dir, out)
    print(f"report written to {out} ({', '.join(written)})")
    return EXIT_OK


def cmd_compare(args, parser) -> int:
    if len(args.run_dirs) < 2:
        parser.error("compare needs at least two run directories")
    rows = runlog.compare(args.run_dirs, args.out)
    print((Path(args.out) / "comparison.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_bench(args, parser) -> int:
    if args.dims < 1:
        parser.error("--dims must be >= 1")
    try:
        cfg = DEConfig(population_size=args.pop, max_generations=args.gens,
                       scale_factor=args.f, crossover_rate=args.cr, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    space = BoxSpace.cube(args.dims)
    evaluator = sphere_evaluator() if args.fn == "sphere" else rastrigin_evaluator()
    result = evolve(space, cfg, evaluator)
    print(f"{result.best.fitness:.12g}")
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "space-init": cmd_space_init,
        "optimize": cmd_optimize,
        "report": cmd_report,
        "compare": cmd_compare,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args, parser)
    except (RunAbortError, DegeneratePopulationError) as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (SpawnError, RunLogError, SpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (EvolineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT


if __name__ == "__main__":
    sys.exit(main())
