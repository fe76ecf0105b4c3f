"""Wire protocol and process management for external fitness workers.

Protocol v1, one UTF-8 JSON object per ``\\n``-terminated line over the
child's stdin/stdout:

    worker -> engine on start:  {"type":"hello","protocol":1,"name":"..."}
    engine -> worker:           {"type":"eval","id":7,"phenotype":{...},
                                 "budget":{"epochs":5,"seed":42}}
    worker -> engine (ok):      {"type":"result","id":7,"fitness":0.875,
                                 "metrics":{...}}          # metrics optional
    worker -> engine (fail):    {"type":"error","id":7,"message":"..."}
    engine -> worker shutdown:  {"type":"shutdown"} then stdin closes.

Unknown fields are ignored; an unknown ``type`` is a protocol error.  A
worker serves one outstanding request at a time; parallelism comes from
running several workers.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass

from .errors import EvaluationError, ProtocolError, SpawnError
from .fitness import EvalBudget, FitnessScore, Metrics

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT_SECS = 10.0
SHUTDOWN_GRACE_SECS = 5.0


@dataclass(frozen=True)
class EvalRequest:
    id: int
    phenotype: dict
    budget: EvalBudget


@dataclass(frozen=True)
class EvalResult:
    id: int
    fitness: float
    metrics: Metrics | None = None


@dataclass(frozen=True)
class WorkerPolicy:
    timeout_secs: float = 600.0
    max_restarts: int = 2
    parallel_workers: int = 1

    def __post_init__(self):
        if self.timeout_secs <= 0:
            raise ValueError("timeout_secs must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be positive")


def serialize_request(request: EvalRequest) -> str:
    """Canonical one-line encoding of an eval request (without newline)."""
    return json.dumps(
        {
            "type": "eval",
            "id": request.id,
            "phenotype": request.phenotype,
            "budget": {"epochs": request.budget.epochs, "seed": request.budget.seed},
        },
        separators=(",", ":"),
    )


def parse_request(line: str) -> EvalRequest:
    obj = _parse_object(line)
    if obj.get("type") != "eval":
        raise ProtocolError(f"expected an eval message, got type {obj.get('type')!r}")
    budget = obj.get("budget") or {}
    return EvalRequest(
        id=int(obj["id"]),
        phenotype=dict(obj["phenotype"]),
        budget=EvalBudget(epochs=int(budget.get("epochs", 1)), seed=int(budget.get("seed", 0))),
    )


def parse_response(line: str) -> EvalResult:
    """Parse a worker response line; worker-reported errors raise
    EvaluationError, malformed lines raise ProtocolError."""
    obj = _parse_object(line)
    kind = obj.get("type")
    if kind == "error":
        raise EvaluationError(str(obj.get("message", "worker error")), kind="error")
    if kind != "result":
        raise ProtocolError(f"unexpected message type {kind!r}")
    try:
        fitness = float(obj["fitness"])
    except (KeyError, TypeError, ValueError):
        raise ProtocolError(f"result without usable fitness: {line!r}") from None
    if not math.isfinite(fitness):
        raise ProtocolError(f"non-finite fitness {fitness!r}")
    metrics = None
    raw_metrics = obj.get("metrics")
    if isinstance(raw_metrics, dict) and raw_metrics.get("confusion"):
        try:
            metrics = Metrics.from_confusion(raw_metrics["confusion"])
        except ValueError as exc:
            raise ProtocolError(f"bad confusion matrix: {exc}") from None
    return EvalResult(id=int(obj.get("id", -1)), fitness=fitness, metrics=metrics)


def _parse_object(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"not a JSON line: {exc.msg}: {line!r}") from None
    if not isinstance(obj, dict):
        raise ProtocolError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def failure_action(phase: str) -> str:
    """Disposition of a failed evaluation: resample initial genotypes (the
    run aborts after repeated failures), keep the target for failed trials."""
    if phase == "initialization":
        return "resample"
    if phase == "trial":
        return "keep_target"
    raise ValueError(f"unknown evaluation phase {phase!r}")


class _LineReader:
    """Background reader so response waits can time out."""

    def __init__(self, stream):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        self._thread.start()

    def _pump(self, stream) -> None:
        try:
            for line in stream:
                self._queue.put(line)
        except ValueError:
            pass  # stream closed under us
        self._queue.put(None)  # EOF marker

    def readline(self, timeout: float) -> str | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None


class WorkerHandle:
    """One child worker process; owned by a single caller at a time."""

    def __init__(self, command: list[str], policy: WorkerPolicy):
        self.command = command
        self.policy = policy
        self.name = "?"
        self.restarts = 0
        self._proc: subprocess.Popen | None = None
        self._reader: _LineReader | None = None
        self._start()

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise SpawnError(f"cannot start worker {self.command!r}: {exc}") from None
        self._reader = _LineReader(self._proc.stdout)
        try:
            line = self._reader.readline(HANDSHAKE_TIMEOUT_SECS)
        except TimeoutError:
            self._kill()
            raise SpawnError(f"worker {self.command!r}: no hello within {HANDSHAKE_TIMEOUT_SECS}s")
        if line is None:
            self._kill()
            raise SpawnError(f"worker {self.command!r} exited before handshake")
        try:
            hello = _parse_object(line)
        except ProtocolError as exc:
            self._kill()
            raise SpawnError(f"worker {self.command!r}: bad hello: {exc}") from None
        if hello.get("type") != "hello":
            self._kill()
            raise SpawnError(f"worker {self.command!r}: first message was {hello.get('type')!r}")
        if hello.get("protocol") != PROTOCOL_VERSION:
            self._kill()
            raise SpawnError(
                f"worker speaks protocol {hello.get('protocol')!r}, engine speaks {PROTOCOL_VERSION}"
            )
        self.name = str(hello.get("name", "?"))

    @property
    def alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def request_eval(self, request: EvalRequest) -> EvalResult:
        """Round-trip one evaluation.  Timeouts, crashes, and protocol
        violations restart the worker (up to max_restarts) and surface as
        EvaluationError; the engine treats them like any failed evaluation."""
        if not self.alive:
            raise EvaluationError(f"worker {self.name} is not running", kind="dead")
        try:
            self._proc.stdin.write(serialize_request(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._handle_breakage()
            raise EvaluationError(f"worker {self.name} died taking request {request.id}", kind="crash")
        try:
            line = self._reader.readline(self.policy.timeout_secs)
        except TimeoutError:
            self._handle_breakage()
            raise EvaluationError(
                f"worker {self.name}: no answer to request {request.id} within "
                f"{self.policy.timeout_secs}s", kind="timeout")
        if line is None:
            self._handle_breakage()
            raise EvaluationError(f"worker {self.name} exited on request {request.id}", kind="crash")
        try:
            result = parse_response(line)
        except ProtocolError as exc:
            self._handle_breakage()
            raise EvaluationError(f"worker {self.name}: {exc}", kind="protocol") from None
        if result.id != request.id:
            self._handle_breakage()
            raise EvaluationError(
                f"worker {self.name}: answer for id {result.id}, expected {request.id}",
                kind="protocol")
        return result

    def _handle_breakage(self) -> None:
        self._kill()
        if self.restarts < self.policy.max_restarts:
            self.restarts += 1
            log.warning("restarting worker %r (%d/%d)", self.command,
                        self.restarts, self.policy.max_restarts)
            try:
                self._start()
            except SpawnError as exc:
                log.error("worker restart failed: %s", exc)

    def _kill(self) -> None:
        if self._proc is None:
            return
        if self._proc.poll() is None:
            self._proc.kill()
        self._proc.wait()
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        self._proc = None

    def shutdown(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.write('{"type":"shutdown"}\n')
            self._proc.stdin.flush()
            self._proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            self._proc.wait(timeout=SHUTDOWN_GRACE_SECS)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        self._proc = None


def spawn_worker(command: list[str], policy: WorkerPolicy | None = None) -> WorkerHandle:
    return WorkerHandle(list(command), policy or WorkerPolicy())


class WorkerPoolEvaluator:
    """Evaluator backed by a pool of worker processes.

    Callers check a handle out per evaluation, so the pool is safe to drive
    from as many threads as it has workers; each worker still sees one
    request at a time.  Decoded phenotypes cross the wire, never genotypes.
    """

    deterministic = False

    def __init__(self, command, policy: WorkerPolicy | None = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.policy = policy or WorkerPolicy()
        self._handles: queue.Queue = queue.Queue()
        self._next_id = 0
        self._id_lock = threading.Lock()
        spawned = []
        try:
            for _ in range(self.policy.parallel_workers):
                spawned.append(WorkerHandle(self.command, self.policy))
        except SpawnError:
            for handle in spawned:
                handle.shutdown()
            raise
        for handle in spawned:
            self._handles.put(handle)
        self._all_handles = spawned

    def evaluate(self, phenotype, budget: EvalBudget) -> FitnessScore:
        with self._id_lock:
            self._next_id += 1
            request = EvalRequest(id=self._next_id, phenotype=dict(phenotype), budget=budget)
        handle = self._handles.get()
        try:
            result = handle.request_eval(request)
        finally:
            self._handles.put(handle)
        return FitnessScore(result.fitness, result.metrics)

    def shutdown(self) -> None:
        for handle in self._all_handles:
            handle.shutdown()

    def __enter__(self) -> "WorkerPoolEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
