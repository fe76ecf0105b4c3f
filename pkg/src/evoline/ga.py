"""Genetic-algorithm baseline sharing the genotype space, evaluators, and
run accounting with the DE engine.

Operators are the textbook simple-GA set: tournament selection, one-point
crossover, uniform-reset mutation, and elitism, so comparisons measure the
search dynamics rather than a hobbled baseline.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .de import (
    Individual,
    Population,
    _EvalCounter,
    _fresh_population,
    _prepare_evaluator,
    initialize_with_retries,
    member_stream,
)
from .errors import EvaluationError
from .fitness import EvalBudget, Evaluator, evaluate_batch
from .hyperspace import Genotype

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 15
    max_generations: int = 10
    crossover_prob: float = 0.9
    mutation_prob: float = 0.1
    tournament_size: int = 3
    elitism_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError(f"crossover_prob must be in [0, 1], got {self.crossover_prob}")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must be in [1, population_size]")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be in [0, population_size)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def tournament_select(pop: Population, k: int, rng: np.random.Generator) -> Individual:
    """Fittest of k members drawn uniformly with replacement."""
    if pop.size == 0:
        raise ValueError("cannot select from an empty population")
    picks = rng.integers(0, pop.size, size=k)
    best = pop.individuals[picks[0]]
    if best.fitness is None:
        raise ValueError("tournament selection requires fitness on every member")
    for idx in picks[1:]:
        candidate = pop.individuals[idx]
        if candidate.fitness is None:
            raise ValueError("tournament selection requires fitness on every member")
        if candidate.fitness > best.fitness:
            best = candidate
    return best


def one_point_crossover(a: Genotype, b: Genotype, rng: np.random.Generator) -> tuple[Genotype, Genotype]:
    """Swap suffixes at a uniform cut point in {1..d-1}."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("one-point crossover needs dimension >= 2")
    cut = int(rng.integers(1, len(a)))
    return a[:cut] + b[cut:], b[:cut] + a[cut:]


def mutate_reset(genotype: Genotype, space, p: float, rng: np.random.Generator) -> Genotype:
    """Independently redraw each component from its own range with probability p."""
    coins = rng.random(len(genotype))
    values = list(genotype)
    for j in range(len(values)):
        if coins[j] < p:
            values[j] = space.sample_component(j, rng)
    return tuple(values)


def evolve_ga(space, cfg: GAConfig, evaluator: Evaluator, run_log=None, *,
              epochs: int = 1, parallelism: int = 1, on_generation=None,
              use_cache: bool | None = None):
    """Generational GA with elitism; emits the same RunResult/history schema
    as the DE engine so runs can be compared directly."""
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
        if generation > 1:
            population = _next_generation(space, cfg, population, generation)
        _evaluate_offspring(space, population, ev, budget, counter, init_streams,
                            generation, parallelism)

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
        config=config_snapshot("ga", cfg, epochs=epochs),
        space=space_snapshot(space),
        stats={"evaluations": counter.total, **(ev.stats() if hasattr(ev, "stats") else {})},
    )
    if run_log is not None:
        run_log.finish(result)
    return result


def _next_generation(space, cfg: GAConfig, population: Population, generation: int) -> Population:
    ranked = sorted(population.individuals, key=lambda ind: ind.fitness, reverse=True)
    next_individuals: list[Individual] = list(ranked[: cfg.elitism_count])
    slot = 0
    while len(next_individuals) < cfg.population_size:
        rng = member_stream(cfg.seed, generation, slot)
        slot += 1
        parent_a = tournament_select(population, cfg.tournament_size, rng)
        parent_b = tournament_select(population, cfg.tournament_size, rng)
        if rng.random() < cfg.crossover_prob and len(parent_a.genotype) >= 2:
            child_a, child_b = one_point_crossover(parent_a.genotype, parent_b.genotype, rng)
        else:
            child_a, child_b = parent_a.genotype, parent_b.genotype
        for child in (child_a, child_b):
            if len(next_individuals) >= cfg.population_size:
                break
            mutated = mutate_reset(child, space, cfg.mutation_prob, rng)
            next_individuals.append(Individual(space.repair(mutated)))
    return Population(next_individuals, generation=generation)


def _evaluate_offspring(space, population: Population, evaluator, budget: EvalBudget,
                        counter: _EvalCounter, init_streams, generation: int,
                        parallelism: int) -> None:
    if generation == 1 and init_streams is not None:
        # Initial population: failed evaluations are resampled per slot.
        initialize_with_retries(space, population, evaluator, budget, counter,
                                init_streams, parallelism)
        return
    pending = [i for i, ind in enumerate(population.individuals) if ind.fitness is None]
    jobs = [(space.decode(population.individuals[i].genotype), budget) for i in pending]
    ids = [counter.next_id() for _ in pending]
    results = evaluate_batch(evaluator, jobs, parallelism)
    for i, eval_id, result in zip(pending, ids, results):
        if isinstance(result, EvaluationError):
            # Same disposition as a failed DE trial: the slot falls back to
            # the fittest elite so the population keeps its size and floor.
            log.warning("offspring eval failed at generation %d slot %d: %s",
                        generation, i, result)
            fallback = max(
                (ind for ind in population.individuals if ind.fitness is not None),
                key=lambda ind: ind.fitness,
                default=None,
            )
            if fallback is None:
                raise EvaluationError("no evaluated individual to fall back on") from result
            population.individuals[i] = Individual(
                fallback.genotype, fallback.fitness, fallback.metrics, fallback.eval_id
            )
        else:
            ind = population.individuals[i]
            ind.fitness = result.value
            ind.metrics = result.metrics
            ind.eval_id = eval_id
