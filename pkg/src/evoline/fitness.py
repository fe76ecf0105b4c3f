"""Fitness evaluation: the evaluator contract, built-in evaluators, score
caching, and classification metrics.

Everything inside the engine is higher-is-better; loss-style evaluators must
negate before reporting.  Built-in evaluators are pure functions of their
inputs and safe to call from several threads at once.
"""

from __future__ import annotations

import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import EvaluationError, SpaceError
from .hyperspace import BoxSpace, Phenotype, SpaceSpec


@dataclass(frozen=True)
class EvalBudget:
    """Resources granted to one evaluation."""

    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class Metrics:
    """Confusion matrix and the usual per-class / macro statistics."""

    confusion: tuple[tuple[int, ...], ...]  # rows = true class, cols = predicted
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float

    @classmethod
    def from_confusion(cls, confusion) -> "Metrics":
        m = np.asarray(confusion, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {m.shape}")
        if (m < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")
        total = int(m.sum())
        if total == 0:
            raise ValueError("confusion matrix is empty")
        diag = np.diag(m).astype(float)
        pred_totals = m.sum(axis=0).astype(float)
        true_totals = m.sum(axis=1).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            precision = np.where(pred_totals > 0, diag / pred_totals, 0.0)
            recall = np.where(true_totals > 0, diag / true_totals, 0.0)
            pr = precision + recall
            f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
        return cls(
            confusion=tuple(tuple(int(x) for x in row) for row in m),
            precision=tuple(precision),
            recall=tuple(recall),
            f1=tuple(f1),
            macro_precision=float(precision.mean()),
            macro_recall=float(recall.mean()),
            macro_f1=float(f1.mean()),
            accuracy=float(diag.sum() / total),
        )

    @property
    def num_classes(self) -> int:
        return len(self.confusion)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": [list(row) for row in self.confusion],
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }


def compute_metrics(y_true, y_pred, num_classes: int) -> Metrics:
    """Confusion matrix and derived statistics for integer label vectors."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1 or t.size == 0:
        raise ValueError("label vectors must be equal-length, 1-D, and non-empty")
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    for name, v in (("y_true", t), ("y_pred", p)):
        if v.min() < 0 or v.max() >= num_classes:
            raise ValueError(f"{name} contains labels outside [0, {num_classes})")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)
    return Metrics.from_confusion(confusion)


@dataclass(frozen=True)
class FitnessScore:
    value: float
    metrics: Metrics | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"fitness must be finite, got {self.value!r}")


@runtime_checkable
class Evaluator(Protocol):
    """Anything that can score a decoded candidate."""

    deterministic: bool

    def evaluate(self, phenotype, budget: EvalBudget) -> FitnessScore: ...


class SurrogateEvaluator:
    """Deterministic stand-in for expensive model training.

    A hidden target phenotype and positive per-gene weights are derived from
    ``hidden_seed``; the score is the weighted mean of per-gene similarities
    (exact match for categorical genes, normalized index proximity for
    ordinal ones).  The target is the unique global optimum with score 1.0,
    so optimizer runs can be certified against exhaustive enumeration.
    """

    deterministic = True

    def __init__(self, space: SpaceSpec, hidden_seed: int = 0):
        self.space = space
        self.hidden_seed = hidden_seed
        rng = np.random.default_rng(np.random.SeedSequence((hidden_seed, 0xE5)))
        self._target_idx = [int(rng.integers(0, g.num_levels)) for g in space.genes]
        self._weights = rng.uniform(0.5, 1.5, size=space.dimension)

    @property
    def target_phenotype(self) -> Phenotype:
        return {g.name: g.levels[i] for g, i in zip(self.space.genes, self._target_idx)}

    def evaluate(self, phenotype: Phenotype, budget: EvalBudget) -> FitnessScore:
        sims = np.empty(self.space.dimension)
        for j, gene in enumerate(self.space.genes):
            if gene.name not in phenotype:
                raise EvaluationError(f"phenotype missing gene {gene.name!r}")
            try:
                idx = gene.levels.index(phenotype[gene.name])
            except ValueError:
                raise EvaluationError(
                    f"gene {gene.name!r}: {phenotype[gene.name]!r} is not an admissible level"
                ) from None
            if gene.kind == "categorical":
                sims[j] = 1.0 if idx == self._target_idx[j] else 0.0
            elif gene.num_levels == 1:
                sims[j] = 1.0
            else:
                sims[j] = 1.0 - abs(idx - self._target_idx[j]) / (gene.num_levels - 1)
        return FitnessScore(float(np.dot(self._weights, sims) / self._weights.sum()))


def sphere(x) -> float:
    """Negated sum of squares; maximum 0.0 at the origin."""
    v = np.asarray(x, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("sphere: non-finite input")
    return float(-np.sum(v**2))


def rastrigin(x) -> float:
    """Negated Rastrigin value; maximum 0.0 at the origin."""
    v = np.asarray(x, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("rastrigin: non-finite input")
    return float(-(10.0 * v.size + np.sum(v**2 - 10.0 * np.cos(2.0 * np.pi * v))))


class BenchmarkEvaluator:
    """Wraps a benchmark function over a continuous box."""

    deterministic = True

    def __init__(self, fn, name: str):
        self._fn = fn
        self.name = name

    def evaluate(self, phenotype, budget: EvalBudget) -> FitnessScore:
        return FitnessScore(self._fn(phenotype))


def sphere_evaluator() -> BenchmarkEvaluator:
    return BenchmarkEvaluator(sphere, "sphere")


def rastrigin_evaluator() -> BenchmarkEvaluator:
    return BenchmarkEvaluator(rastrigin, "rastrigin")


def phenotype_key(phenotype, budget: EvalBudget) -> str:
    """Canonical cache key for a (candidate, budget) pair."""
    if isinstance(phenotype, dict):
        payload = json.dumps(phenotype, sort_keys=True)
    else:
        payload = json.dumps(list(float(v) for v in phenotype))
    return f"{payload}|epochs={budget.epochs}|seed={budget.seed}"


class CachedEvaluator:
    """Memoizes a deterministic evaluator by canonical phenotype + budget.

    Concurrent lookups of the same key may race and both call through; the
    values are identical by determinism, so last-write-wins is safe.
    """

    def __init__(self, inner: Evaluator):
        if not getattr(inner, "deterministic", False):
            raise ValueError("refusing to cache a non-deterministic evaluator")
        self.inner = inner
        self.deterministic = True
        self.hits = 0
        self.misses = 0
        self._scores: dict[str, FitnessScore] = {}
        self._lock = threading.Lock()

    def evaluate(self, phenotype, budget: EvalBudget) -> FitnessScore:
        key = phenotype_key(phenotype, budget)
        with self._lock:
            cached_score = self._scores.get(key)
            if cached_score is not None:
                self.hits += 1
                return cached_score
        score = self.inner.evaluate(phenotype, budget)
        with self._lock:
            self.misses += 1
            self._scores[key] = score
        return score

    def stats(self) -> dict:
        with self._lock:
            return {"cache_hits": self.hits, "cache_misses": self.misses}


def cached(evaluator: Evaluator) -> CachedEvaluator:
    return CachedEvaluator(evaluator)


def evaluate_batch(evaluator: Evaluator, jobs, parallelism: int = 1):
    """Evaluate ``jobs`` ([(phenotype, budget), ...]) and join all results.

    Returns one entry per job, in job order: a FitnessScore, or the
    EvaluationError that the evaluator raised for it.  Other exception types
    indicate engine bugs and propagate.
    """
    jobs = list(jobs)

    def run_one(job):
        phenotype, budget = job
        try:
            return evaluator.evaluate(phenotype, budget)
        except EvaluationError as exc:
            return exc

    if parallelism <= 1 or len(jobs) <= 1:
        return [run_one(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=min(parallelism, len(jobs))) as pool:
        return list(pool.map(run_one, jobs))
