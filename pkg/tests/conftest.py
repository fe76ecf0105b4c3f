import sys
from pathlib import Path

import pytest

from evoline.fitness import FitnessScore
from evoline.hyperspace import GeneSpec, SpaceSpec

TESTS_DIR = Path(__file__).parent
FAKE_WORKER = TESTS_DIR / "fake_worker.py"
GOLDEN_DIR = TESTS_DIR / "golden"


def fake_worker_cmd(*extra: str) -> list[str]:
    return [sys.executable, str(FAKE_WORKER), *extra]


def formula_fitness(phenotype: dict) -> float:
    """Reference twin of the fake worker's scoring rule."""
    acc = 0.0
    for key in sorted(phenotype):
        value = phenotype[key]
        acc += float(value) if isinstance(value, (int, float)) else float(len(str(value)))
    return (acc % 97.0) / 97.0


class FormulaEvaluator:
    """In-process evaluator matching the fake worker, with optional failures."""

    deterministic = True

    def __init__(self, fail_on: str | None = None):
        self.fail_on = fail_on
        self.calls = 0

    def evaluate(self, phenotype, budget):
        from evoline.errors import EvaluationError

        self.calls += 1
        if self.fail_on is not None and self.fail_on in {str(v) for v in phenotype.values()}:
            raise EvaluationError("injected failure")
        return FitnessScore(formula_fitness(phenotype))


@pytest.fixture
def toy_space() -> SpaceSpec:
    """24 combinations; small enough to brute-force everywhere."""
    return SpaceSpec(
        (
            GeneSpec("a", "categorical", ("a1", "a2")),
            GeneSpec("b", "ordinal", (1, 2, 3)),
            GeneSpec("c", "ordinal", (10, 20, 30, 40)),
        ),
        template="custom",
    )


@pytest.fixture
def mixed_space() -> SpaceSpec:
    """1536 combinations; the optimum-recovery workbench."""
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
