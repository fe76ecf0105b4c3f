"""Evolutionary hyperparameter search over mixed categorical/ordinal spaces."""

from .de import DEConfig, Individual, Population, evolve
from .fitness import (
    EvalBudget,
    FitnessScore,
    Metrics,
    SurrogateEvaluator,
    cached,
    compute_metrics,
    rastrigin,
    sphere,
)
from .ga import GAConfig, evolve_ga
from .hyperspace import (
    BoxSpace,
    GeneSpec,
    SpaceSpec,
    decode,
    default_space,
    dump_space,
    encode,
    load_space,
    repair,
)
from .runlog import RunLog, RunResult, compare, report
from .workerproto import WorkerPolicy, WorkerPoolEvaluator, spawn_worker

__version__ = "0.1.0"

__all__ = [
    "BoxSpace",
    "DEConfig",
    "EvalBudget",
    "FitnessScore",
    "GAConfig",
    "GeneSpec",
    "Individual",
    "Metrics",
    "Population",
    "RunLog",
    "RunResult",
    "SpaceSpec",
    "SurrogateEvaluator",
    "WorkerPolicy",
    "WorkerPoolEvaluator",
    "cached",
    "compare",
    "compute_metrics",
    "decode",
    "default_space",
    "dump_space",
    "encode",
    "evolve",
    "evolve_ga",
    "load_space",
    "rastrigin",
    "repair",
    "report",
    "spawn_worker",
    "sphere",
]
