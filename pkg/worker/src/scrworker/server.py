"""Protocol v1 request loop: hello first, then one JSON line in, one out.

Evaluation failures become error replies; malformed lines get an error with
a best-effort id and the loop keeps serving.  A shutdown message or EOF ends
the process cleanly.
"""

from __future__ import annotations

import json
import re
import sys

PROTOCOL_VERSION = 1
_ID_PATTERN = re.compile(r'"id"\s*:\s*(\d+)')


def _emit(out, payload: dict) -> None:
    out.write(json.dumps(payload) + "\n")
    out.flush()


def serve(handler, name: str, stdin=None, stdout=None) -> int:
    """``handler(phenotype, epochs, seed) -> (fitness, metrics | None)``."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    _emit(stdout, {"type": "hello", "protocol": PROTOCOL_VERSION, "name": name})

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
            if not isinstance(message, dict):
                raise ValueError("not an object")
        except ValueError:
            guessed = _ID_PATTERN.search(line)
            _emit(stdout, {"type": "error", "id": int(guessed.group(1)) if guessed else 0,
                           "message": "malformed request line"})
            continue

        kind = message.get("type")
        if kind == "shutdown":
            return 0
        if kind != "eval":
            _emit(stdout, {"type": "error", "id": int(message.get("id", 0)),
                           "message": f"unsupported message type {kind!r}"})
            continue

        request_id = int(message.get("id", 0))
        try:
            budget = message.get("budget") or {}
            fitness, metrics = handler(
                dict(message["phenotype"]),
                int(budget.get("epochs", 1)),
                int(budget.get("seed", 0)),
            )
            reply = {"type": "result", "id": request_id, "fitness": float(fitness)}
            if metrics is not None:
                reply["metrics"] = metrics
            _emit(stdout, reply)
        except Exception as exc:  # report, keep serving
            _emit(stdout, {"type": "error", "id": request_id, "message": str(exc)})
    return 0
