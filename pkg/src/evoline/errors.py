"""Exception types shared across the engine."""


class EvolineError(Exception):
    """Base class for all engine errors."""


class SpaceError(EvolineError):
    """Invalid search-space definition, document, or phenotype."""


class DegeneratePopulationError(EvolineError):
    """No usable donor triple exists (population has collapsed)."""


class EvaluationError(EvolineError):
    """A fitness evaluation failed.

    ``kind`` classifies the failure: "error" (evaluator-reported),
    "timeout", "crash", "protocol", or "dead" (worker gave up restarting).
    """

    def __init__(self, message: str, kind: str = "error"):
        super().__init__(message)
        self.kind = kind


class ProtocolError(EvolineError):
    """Malformed or unexpected message on the worker wire protocol."""


class SpawnError(EvolineError):
    """A worker process could not be started or did not handshake."""


class RunAbortError(EvolineError):
    """The optimization run had to be aborted."""


class RunLogError(EvolineError):
    """Run directory is unusable: incompatible, incomplete, or corrupt."""
