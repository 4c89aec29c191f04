"""External decision policy over newline-delimited JSON (subprocess) or HTTP POST.

Request::

    {"session_id", "node_id", "node_type", "actions": [...],
     "context": {"path": [...], "knowledge": [...], "preferences": {...}, "anchor": {...}}}

Response::

    {"scores": {"<action>": number, ...}, "rationale": "string"}

Any transport error, timeout, or malformed response falls back to the
deterministic policy and is recorded in :attr:`ExternalPolicy.events`.
"""

from __future__ import annotations

import json
import logging
import math
import os
import queue
import subprocess
import threading
import urllib.request
from dataclasses import dataclass
from typing import Any, Sequence

from stepo.reasoning.policy import deterministic_policy, normalize

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0
TIMEOUT_ENV = "STEPO_POLICY_TIMEOUT_MS"


class ProtocolError(ValueError):
    pass


def resolve_timeout(timeout_s: float | None) -> float:
    env = os.environ.get(TIMEOUT_ENV)
    if env is not None and env.strip():
        return float(env) / 1000.0
    return DEFAULT_TIMEOUT_S if timeout_s is None else float(timeout_s)


class SubprocessTransport:
    """Long-lived child process; one JSON request per line in, one response per line out."""

    def __init__(self, cmd: Sequence[str] | str) -> None:
        self.cmd = cmd if isinstance(cmd, (list, tuple)) else cmd.split()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()

    def _start(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._lines = queue.Queue()
            self._proc = subprocess.Popen(
                list(self.cmd), stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True, bufsize=1
            )
            threading.Thread(target=self._pump, args=(self._proc, self._lines), daemon=True).start()
        return self._proc

    @staticmethod
    def _pump(proc: subprocess.Popen, lines: queue.Queue) -> None:
        for line in proc.stdout:
            lines.put(line)
        lines.put(None)

    def request(self, payload: dict, timeout: float) -> Any:
        proc = self._start()
        try:
            proc.stdin.write(json.dumps(payload, sort_keys=True) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise ConnectionError(f"adapter process unavailable: {exc}") from None
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            # a late reply would desynchronize the stream, so restart on next call
            self.close()
            raise TimeoutError(f"no adapter response within {timeout:.3f}s") from None
        if line is None:
            self.close()
            raise ConnectionError("adapter process exited")
        return json.loads(line)

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.poll() is None:
                self._proc.kill()
            self._proc.wait()
            for stream in (self._proc.stdin, self._proc.stdout):
                try:
                    stream.close()
                except OSError:
                    pass
            self._proc = None


class HttpTransport:
    def __init__(self, url: str) -> None:
        self.url = url

    def request(self, payload: dict, timeout: float) -> Any:
        data = json.dumps(payload, sort_keys=True).encode("utf-8")
        req = urllib.request.Request(self.url, data=data, headers={"Content-Type": "application/json"}, method="POST")
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def close(self) -> None:
        pass


@dataclass(frozen=True)
class FallbackEvent:
    node_id: str
    node_type: str
    reason: str


def validate_scores(response: Any, actions: Sequence[str]) -> dict[str, float]:
    if not isinstance(response, dict) or not isinstance(response.get("scores"), dict):
        raise ProtocolError("response lacks a 'scores' object")
    scores = response["scores"]
    missing = [a for a in actions if a not in scores]
    if missing:
        raise ProtocolError(f"scores missing actions {missing}")
    out = {}
    for a in actions:
        v = scores[a]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ProtocolError(f"invalid score for {a!r}: {v!r}")
        out[a] = float(v)
    if sum(out.values()) <= 0:
        raise ProtocolError("all scores are zero")
    return out


class ExternalPolicy:
    """Policy backed by an external decision service, with deterministic fallback."""

    def __init__(self, transport, kb, timeout_s: float | None = None, session_id: str = "session", epsilon: float = 1e-6) -> None:
        self.transport = transport
        self.kb = kb
        self.timeout_s = resolve_timeout(timeout_s)
        self.session_id = session_id
        self.epsilon = epsilon
        self.events: list[FallbackEvent] = []
        self.rationales: dict[str, str] = {}

    def request_payload(self, context, actions) -> dict:
        return {
            "session_id": self.session_id,
            "node_id": context.node_id,
            "node_type": actions.dtype,
            "actions": list(actions.actions),
            "context": context.to_wire(),
        }

    def __call__(self, context, actions) -> dict[str, float]:
        try:
            if self.timeout_s <= 0:
                raise TimeoutError("adapter timeout is zero")
            response = self.transport.request(self.request_payload(context, actions), self.timeout_s)
            scores = validate_scores(response, actions.actions)
            rationale = response.get("rationale")
            if isinstance(rationale, str):
                self.rationales[context.node_id] = rationale
            return normalize(scores, self.epsilon)
        except Exception as exc:  # noqa: BLE001 - every adapter failure degrades the same way
            self.events.append(FallbackEvent(context.node_id, actions.dtype, f"{type(exc).__name__}: {exc}"))
            log.warning("external policy fallback at %s: %s", context.node_id, exc)
            return deterministic_policy(context, actions, self.kb, epsilon=self.epsilon)

    def close(self) -> None:
        self.transport.close()


def external_policy(context, actions, transport, kb, timeout_s: float | None = None) -> dict[str, float]:
    """One-shot form of :class:`ExternalPolicy`."""
    return ExternalPolicy(transport, kb, timeout_s)(context, actions)
