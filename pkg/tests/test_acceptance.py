"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and enforcing its wallclock budget.  Run with `pytest -s tests/test_acceptance.py`
to see the lines as they complete."""

import functools
import time

import numpy as np
import pytest

from conftest import FormulaEvaluator, fake_worker_cmd
from evoline.de import (
    DEConfig,
    Individual,
    crossover_binomial,
    evolve,
    layerwise_donor,
    rand1_donor,
    select,
)
from evoline.fitness import (
    EvalBudget,
    SurrogateEvaluator,
    compute_metrics,
    sphere_evaluator,
)
from evoline.ga import GAConfig, evolve_ga
from evoline.hyperspace import BoxSpace, GeneSpec, SpaceSpec, decode, default_space, encode
from evoline.runlog import RunLog, config_snapshot, read_history_rows, space_snapshot
from evoline.workerproto import EvalRequest, WorkerPolicy, WorkerPoolEvaluator, serialize_request


def criterion(name, limit_secs):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                assert elapsed < limit_secs, f"took {elapsed:.2f}s, budget {limit_secs}s"
            except BaseException:
                print(f"\nACCEPTANCE FAIL [{name}]")
                raise
            print(f"\nACCEPTANCE PASS [{name}] ({elapsed:.2f}s)")

        return wrapper

    return decorate


def toy_space_d3():
    return SpaceSpec(
        (
            GeneSpec("a", "categorical", ("a1", "a2")),
            GeneSpec("b", "ordinal", (1, 2, 3)),
            GeneSpec("c", "ordinal", (10, 20, 30, 40)),
        ),
        template="custom",
    )


def recovery_space():
    """1536 combinations (<= 4096), mirroring the real genes' shapes."""
    return SpaceSpec(
        (
            GeneSpec("fs", "categorical", ("3x3", "5x5")),
            GeneSpec("act", "categorical", ("relu", "selu", "elu")),
            GeneSpec("nf", "ordinal", (16, 32, 64, 128)),
            GeneSpec("dp", "ordinal", (0.1, 0.2, 0.3, 0.4)),
            GeneSpec("opt", "categorical", ("sgd", "adam", "adagrad", "adamax")),
            GeneSpec("non", "ordinal", (128, 256, 512, 1024)),
        ),
        template="custom",
    )


@criterion("encoding round-trip", 1.0)
def test_encoding_round_trip():
    toy = toy_space_d3()
    seen = 0
    for phenotype in toy.all_phenotypes():
        assert decode(encode(phenotype, toy), toy) == phenotype
        seen += 1
    assert seen == 24

    space = default_space()
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        phenotype = decode(space.sample(rng), space)
        assert decode(encode(phenotype, space), space) == phenotype


@criterion("operator algebra", 1.0)
def test_operator_algebra():
    space = SpaceSpec(
        tuple(GeneSpec(f"g{j}", "ordinal", (1, 2, 3, 4, 5, 6)) for j in range(6)),
        template="custom",
    )
    x1 = (1.0, 2.0, 3.0, 4.0, 5.0, 0.0)
    same = (2.0, 2.0, 2.0, 2.0, 2.0, 2.0)

    # rand/1 with a zero difference vector returns the base exactly
    assert rand1_donor(x1, same, same, 0.6, space) == x1

    # per-dimension scheme with F=1 copies the base in every dimension
    donor = layerwise_donor(x1, (5.0,) * 6, (0.0,) * 6, 1.0, np.random.default_rng(0), space)
    assert donor == x1

    # crossover extremes
    target, moved = (0.0,) * 6, (1.0,) * 6
    assert crossover_binomial(target, moved, 1.0, np.random.default_rng(1)) == moved
    for seed in range(25):
        trial = crossover_binomial(target, moved, 0.0, np.random.default_rng(seed))
        assert sum(1 for t, x in zip(trial, target) if t != x) == 1

    # selection ties go to the trial
    assert select(Individual((0.0,), 0.85), Individual((1.0,), 0.85)).genotype == (1.0,)
    assert select(Individual((0.0,), 0.80), Individual((1.0,), 0.90)).genotype == (1.0,)
    assert select(Individual((0.0,), 0.90), Individual((1.0,), 0.80)).genotype == (0.0,)


@criterion("crossover distribution", 5.0)
def test_crossover_distribution():
    target, donor = (0.0,) * 20, (1.0,) * 20
    rng = np.random.default_rng(99)
    total = sum(
        sum(crossover_binomial(target, donor, 0.5, rng)) for _ in range(10_000)
    )
    mean = total / 10_000
    assert abs(mean - 10.5) < 0.3, f"mean donor dimensions {mean}"


@criterion("elitism monotonicity", 30.0)
def test_elitism_monotonicity():
    space = recovery_space()
    evaluator = SurrogateEvaluator(space, 5)
    for seed in range(20):
        result = evolve(space, DEConfig(population_size=10, max_generations=10, seed=seed),
                        evaluator)
        bests = [r.best_fitness for r in result.history]
        assert all(x <= y for x, y in zip(bests, bests[1:])), f"DE seed {seed} decreased"
    for seed in range(20):
        result = evolve_ga(space, GAConfig(population_size=10, max_generations=10, seed=seed),
                           evaluator)
        bests = [r.best_fitness for r in result.history]
        assert all(x <= y for x, y in zip(bests, bests[1:])), f"GA seed {seed} decreased"


@criterion("global-optimum recovery", 60.0)
def test_global_optimum_recovery():
    space = recovery_space()
    assert space.num_combinations() <= 4096
    evaluator = SurrogateEvaluator(space, 7)

    # certify the optimum by exhaustive enumeration
    budget = EvalBudget()
    scored = [(evaluator.evaluate(p, budget).value, p) for p in space.all_phenotypes()]
    best_value, optimum = max(scored, key=lambda pair: pair[0])
    assert best_value == 1.0
    assert sum(1 for v, _ in scored if v == 1.0) == 1
    assert optimum == evaluator.target_phenotype

    hits = 0
    for seed in range(1, 11):
        cfg = DEConfig(population_size=15, max_generations=30,
                       scale_factor=0.6, crossover_rate=0.9, seed=seed)
        result = evolve(space, cfg, evaluator)
        hits += result.best_phenotype == optimum
    assert hits >= 9, f"optimum found in only {hits}/10 runs"


@criterion("continuous sanity", 10.0)
def test_continuous_sanity():
    box = BoxSpace.cube(10)
    ok = 0
    for seed in range(1, 11):
        cfg = DEConfig(population_size=20, max_generations=200,
                       scale_factor=0.6, crossover_rate=0.9, seed=seed)
        result = evolve(box, cfg, sphere_evaluator())
        ok += abs(result.best.fitness) < 1e-3
    assert ok >= 9, f"converged in only {ok}/10 runs"


@criterion("determinism", 10.0)
def test_determinism(tmp_path):
    space = recovery_space()
    cfg = DEConfig(population_size=10, max_generations=10, seed=42)
    config = config_snapshot("de", cfg, epochs=1)
    for name in ("one", "two"):
        run = RunLog.open_run(tmp_path / name, config, space_snapshot(space))
        evolve(space, cfg, SurrogateEvaluator(space, 3), run)
    assert (tmp_path / "one" / "history.csv").read_bytes() == \
        (tmp_path / "two" / "history.csv").read_bytes()


@criterion("metrics oracle", 1.0)
def test_metrics_oracle():
    m = compute_metrics((0, 0, 1, 1), (0, 1, 1, 1), 2)
    assert m.precision == (1.0, pytest.approx(2 / 3))
    assert m.recall == (0.5, 1.0)
    assert m.accuracy == 0.75

    rng = np.random.default_rng(7)
    for _ in range(100):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, 60))
        t = rng.integers(0, k, size=n)
        p = rng.integers(0, k, size=n)
        m = compute_metrics(t, p, k)
        confusion = [[int(np.sum((t == i) & (p == j))) for j in range(k)] for i in range(k)]
        assert [list(row) for row in m.confusion] == confusion
        diag = sum(confusion[i][i] for i in range(k))
        assert m.accuracy == diag / n


@criterion("protocol golden files", 10.0)
def test_protocol_golden_files(tmp_path):
    from conftest import GOLDEN_DIR
    from evoline.workerproto import parse_request, parse_response

    # byte-exact golden pair
    request = EvalRequest(
        id=7,
        phenotype={"global.activation": "ELU", "conv_block_1.filter_size": "3x3"},
        budget=EvalBudget(epochs=5, seed=42),
    )
    golden_request = (GOLDEN_DIR / "eval_request.jsonl").read_text(encoding="utf-8")
    assert serialize_request(request) + "\n" == golden_request
    golden_response = (GOLDEN_DIR / "eval_response.jsonl").read_text(encoding="utf-8")
    parsed = parse_response(golden_response)
    assert parsed.fitness == 0.875 and parsed.id == 7

    # serialization round-trip on randomized requests
    space = recovery_space()
    rng = np.random.default_rng(0)
    for i in range(100):
        phenotype = space.decode(space.sample(rng))
        req = EvalRequest(i, phenotype, EvalBudget(int(rng.integers(1, 9)), int(rng.integers(0, 999))))
        assert parse_request(serialize_request(req)) == req

    # crash and timeout handling leave the engine exactly on the failure path
    toy = toy_space_d3()
    cfg = DEConfig(population_size=5, max_generations=3, seed=21)
    config = config_snapshot("de", cfg, epochs=1)

    def run_and_read(name, evaluator):
        run = RunLog.open_run(tmp_path / name, config, space_snapshot(toy))
        evolve(toy, cfg, evaluator, run, use_cache=False)
        return (tmp_path / name / "history.csv").read_bytes()

    reference = run_and_read("reference", FormulaEvaluator(fail_on="a2"))
    with WorkerPoolEvaluator(fake_worker_cmd("--crash-on", "a2"),
                             WorkerPolicy(timeout_secs=10.0, max_restarts=100)) as pool:
        assert run_and_read("crash", pool) == reference
    with WorkerPoolEvaluator(fake_worker_cmd("--sleep-on", "a2", "--sleep-secs", "30"),
                             WorkerPolicy(timeout_secs=0.4, max_restarts=100)) as pool:
        assert run_and_read("timeout", pool) == reference


@criterion("resume", 30.0)
def test_resume(tmp_path):
    space = recovery_space()
    cfg = DEConfig(population_size=10, max_generations=10, seed=6)
    config = config_snapshot("de", cfg, epochs=1)
    evaluator = SurrogateEvaluator(space, 13)

    full = RunLog.open_run(tmp_path / "full", config, space_snapshot(space))
    evolve(space, cfg, evaluator, full)

    class Killed(Exception):
        pass

    def kill_after_six(record):
        if record.generation == 6:
            raise Killed()

    part = RunLog.open_run(tmp_path / "part", config, space_snapshot(space))
    with pytest.raises(Killed):
        evolve(space, cfg, evaluator, part, on_generation=kill_after_six)
    prefix = (tmp_path / "part" / "history.csv").read_bytes()
    assert len(read_history_rows(tmp_path / "part")) == 6

    resumed_log = RunLog.open_run(tmp_path / "part", config, space_snapshot(space))
    evolve(space, cfg, evaluator, resumed_log)

    final = (tmp_path / "part" / "history.csv").read_bytes()
    assert len(read_history_rows(tmp_path / "part")) == 10
    assert final.startswith(prefix)
    assert final == (tmp_path / "full" / "history.csv").read_bytes()
