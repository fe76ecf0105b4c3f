"""Differential evolution over index-coded (or continuous) genotypes.

One generation evaluates any unset fitness, then for every target vector
builds a donor by mutation, a trial by binomial crossover, evaluates the
trial, and keeps the fitter of target and trial (ties go to the trial).
All random draws come from per-(generation, member) child streams of the run
seed, so a resumed run replays exactly the draws of an uninterrupted one and
parallel evaluation cannot perturb operator state.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegeneratePopulationError, EvaluationError, RunAbortError
from .fitness import EvalBudget, Evaluator, FitnessScore, Metrics, cached, evaluate_batch
from .hyperspace import Genotype

log = logging.getLogger(__name__)

MUTATION_SCHEMES = ("standard_rand1", "layerwise")

# Failed evaluations during initialization are resampled; this many failures
# for one slot abort the run.  Trial failures never abort: the target simply
# survives into the next generation.
INIT_MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class DEConfig:
    population_size: int = 10
    max_generations: int = 10
    scale_factor: float = 0.6
    crossover_rate: float = 0.9
    mutation_scheme: str = "standard_rand1"
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4 (target plus three distinct others)")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if not 0.0 < self.scale_factor <= 1.0:
            raise ValueError(f"scale_factor must be in (0, 1], got {self.scale_factor}")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError(f"crossover_rate must be in [0, 1], got {self.crossover_rate}")
        if self.mutation_scheme not in MUTATION_SCHEMES:
            raise ValueError(f"mutation_scheme must be one of {MUTATION_SCHEMES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class Individual:
    genotype: Genotype
    fitness: float | None = None
    metrics: Metrics | None = None
    eval_id: int | None = None


@dataclass
class Population:
    individuals: list[Individual]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.individuals)

    def best(self) -> Individual:
        return max(self.individuals, key=lambda ind: ind.fitness)

    def mean_fitness(self) -> float:
        return float(np.mean([ind.fitness for ind in self.individuals]))


def member_stream(seed: int, generation: int, member: int) -> np.random.Generator:
    """Child random stream for one population slot in one generation."""
    return np.random.default_rng(np.random.SeedSequence((seed, generation, member)))


def init_population(space, cfg: DEConfig) -> Population:
    """N genotypes sampled uniformly from the space; fitness unset."""
    population, _ = _fresh_population(space, cfg.population_size, cfg.seed)
    return population


def _fresh_population(space, size: int, seed: int):
    """Initial population plus its per-slot streams (kept for resampling, so
    a retried slot draws the next value instead of repeating its first)."""
    streams = [member_stream(seed, 0, i) for i in range(size)]
    population = Population([Individual(space.sample(s)) for s in streams], generation=0)
    return population, streams


def _draw_distinct(rng: np.random.Generator, size: int, exclude: int, count: int = 3) -> list[int]:
    candidates = np.array([j for j in range(size) if j != exclude])
    return [int(j) for j in rng.choice(candidates, size=count, replace=False)]


def rand1_donor(x1: Genotype, x2: Genotype, x3: Genotype, f: float, space) -> Genotype:
    """Classic donor: base vector plus a scaled difference, clamped into range."""
    v = np.asarray(x1, dtype=float) + f * (np.asarray(x2, dtype=float) - np.asarray(x3, dtype=float))
    return space.repair(v)


def layerwise_donor(x1, x2, x3, f: float, rng: np.random.Generator, space) -> Genotype:
    """Per-dimension donor: copy from the base with probability ``f``, else
    take the absolute difference of the other two parents; clamped into range."""
    coins = rng.random(len(x1))
    v = [
        x1[j] if coins[j] <= f else abs(x2[j] - x3[j])
        for j in range(len(x1))
    ]
    return space.repair(v)


def mutate_rand1(pop: Population, i: int, f: float, rng: np.random.Generator, space) -> Genotype:
    if pop.size < 4:
        raise ValueError("mutation needs a population of at least 4")
    r1, r2, r3 = _draw_distinct(rng, pop.size, exclude=i)
    return rand1_donor(pop.individuals[r1].genotype, pop.individuals[r2].genotype,
                       pop.individuals[r3].genotype, f, space)


def mutate_layerwise(pop: Population, i: int, f: float, rng: np.random.Generator, space) -> Genotype:
    if pop.size < 4:
        raise ValueError("mutation needs a population of at least 4")
    # The difference parents must differ as whole vectors; a population that
    # cannot supply such a pair within N*N draws has collapsed.
    for _ in range(pop.size * pop.size):
        r1, r2, r3 = _draw_distinct(rng, pop.size, exclude=i)
        if pop.individuals[r2].genotype != pop.individuals[r3].genotype:
            return layerwise_donor(pop.individuals[r1].genotype, pop.individuals[r2].genotype,
                                   pop.individuals[r3].genotype, f, rng, space)
    raise DegeneratePopulationError(
        f"no distinct difference pair found in {pop.size * pop.size} draws"
    )


def crossover_binomial(target: Genotype, donor: Genotype, cr: float, rng: np.random.Generator) -> Genotype:
    if len(target) != len(donor):
        raise ValueError(f"dimension mismatch: target {len(target)}, donor {len(donor)}")
    d = len(target)
    delta = int(rng.integers(0, d))  # forced donor dimension, drawn before the loop
    coins = rng.random(d)
    return tuple(
        donor[j] if coins[j] <= cr or j == delta else target[j]
        for j in range(d)
    )


def select(target: Individual, trial: Individual) -> Individual:
    """Greedy one-to-one selection; equal fitness keeps the trial."""
    if target.fitness is None or trial.fitness is None:
        raise ValueError("selection requires both fitness values")
    return trial if target.fitness <= trial.fitness else target


class _EvalCounter:
    """Hands out run-unique evaluation ids and tracks the running total."""

    def __init__(self, start: int = 0):
        self.total = start

    def next_id(self) -> int:
        self.total += 1
        return self.total


def _prepare_evaluator(evaluator: Evaluator, use_cache: bool | None):
    if use_cache is None:
        use_cache = getattr(evaluator, "deterministic", False)
    if use_cache and not hasattr(evaluator, "stats"):
        return cached(evaluator)
    return evaluator


def initialize_with_retries(space, population: Population, evaluator, budget: EvalBudget,
                            counter: _EvalCounter, streams, parallelism: int = 1) -> None:
    """Evaluate the initial population, resampling any slot whose evaluation
    fails, up to INIT_MAX_ATTEMPTS per slot; then abort the run."""
    pending = list(range(population.size))
    for attempt in range(INIT_MAX_ATTEMPTS):
        jobs = []
        ids = []
        for i in pending:
            jobs.append((space.decode(population.individuals[i].genotype), budget))
            ids.append(counter.next_id())
        results = evaluate_batch(evaluator, jobs, parallelism)
        still_failing = []
        for i, eval_id, result in zip(pending, ids, results):
            if isinstance(result, EvaluationError):
                log.warning("initialization eval failed for slot %d (attempt %d): %s",
                            i, attempt + 1, result)
                still_failing.append(i)
            else:
                ind = population.individuals[i]
                ind.fitness = result.value
                ind.metrics = result.metrics
                ind.eval_id = eval_id
        if not still_failing:
            return
        if attempt + 1 >= INIT_MAX_ATTEMPTS:
            raise RunAbortError(
                f"initialization failed {INIT_MAX_ATTEMPTS} times for slots {still_failing}"
            )
        for i in still_failing:
            population.individuals[i] = Individual(space.sample(streams[i]))
        pending = still_failing


def evolve(space, cfg: DEConfig, evaluator: Evaluator, run_log=None, *,
           epochs: int = 1, parallelism: int = 1, on_generation=None,
           use_cache: bool | None = None):
    """Run the full generational loop and return a RunResult.

    ``run_log`` (a runlog.RunLog) persists snapshots and history rows; when
    it already holds completed generations the run resumes after them.
    ``on_generation`` is called with each GenerationRecord as it completes.
    """
    from .runlog import GenerationRecord, RunResult, config_snapshot, space_snapshot

    ev = _prepare_evaluator(evaluator, use_cache)
    budget = EvalBudget(epochs=epochs, seed=cfg.seed)
    history: list[GenerationRecord] = []

    start_generation = 0
    init_streams = None
    if run_log is not None and run_log.completed_generations() > 0:
        start_generation = run_log.completed_generations()
        population, counter_start = run_log.load_population(start_generation)
        counter = _EvalCounter(counter_start)
        history.extend(run_log.records())
        log.info("resuming after generation %d (%d evaluations so far)",
                 start_generation, counter_start)
    else:
        counter = _EvalCounter()
        population, init_streams = _fresh_population(space, cfg.population_size, cfg.seed)

    for generation in range(start_generation + 1, cfg.max_generations + 1):
        tick = time.monotonic()
        if init_streams is not None and any(ind.fitness is None for ind in population.individuals):
            initialize_with_retries(space, population, ev, budget, counter,
                                    init_streams, parallelism)

        trials: list[Genotype] = []
        for i in range(population.size):
            rng = member_stream(cfg.seed, generation, i)
            if cfg.mutation_scheme == "layerwise":
                donor = mutate_layerwise(population, i, cfg.scale_factor, rng, space)
            else:
                donor = mutate_rand1(population, i, cfg.scale_factor, rng, space)
            trials.append(crossover_binomial(population.individuals[i].genotype,
                                             donor, cfg.crossover_rate, rng))

        jobs = [(space.decode(trial), budget) for trial in trials]
        ids = [counter.next_id() for _ in trials]
        results = evaluate_batch(ev, jobs, parallelism)

        for i, (trial, eval_id, result) in enumerate(zip(trials, ids, results)):
            if isinstance(result, EvaluationError):
                log.warning("trial eval failed at generation %d slot %d: %s",
                            generation, i, result)
                continue  # target survives
            trial_ind = Individual(trial, result.value, result.metrics, eval_id)
            population.individuals[i] = select(population.individuals[i], trial_ind)

        population.generation = generation
        record = GenerationRecord(
            generation=generation,
            best_fitness=population.best().fitness,
            mean_fitness=population.mean_fitness(),
            evals=counter.total,
            wallclock_secs=time.monotonic() - tick,
        )
        history.append(record)
        if run_log is not None:
            run_log.append_generation(population, record)
        if on_generation is not None:
            on_generation(record)

    best = population.best()
    result = RunResult(
        best=best,
        best_phenotype=space.decode(best.genotype),
        history=history,
        config=config_snapshot("de", cfg, epochs=epochs),
        space=space_snapshot(space),
        stats={"evaluations": counter.total, **(ev.stats() if hasattr(ev, "stats") else {})},
    )
    if run_log is not None:
        run_log.finish(result)
    return result
