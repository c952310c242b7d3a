"""Generative-model contract, input serialization, built-in retrieval model,
and the JSON-lines wire-protocol client for external models.

All four roles (logic-to-text, LF generation, table-to-logic, table-to-text)
share one contract: weighted training pairs in, beam-decoded strings out.
Sources and targets travel as whitespace-token strings, matching the wire
protocol exactly.
"""

from __future__ import annotations

import abc
import json
import logging
import select
import shutil
import socket
import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .tables import Table
from .tokenize import whitespace_tokenize

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

# Reserved segment/delimiter tokens used by serialize_input.
TYPE_MARK = "<type>"
CAPTION_MARK = "<caption>"
HEADERS_MARK = "<headers>"
CONTENT_MARK = "<content>"
LF_MARK = "<lf>"
TEXT_MARK = "<text>"
CELL_SEP = "<c>"


class Role(str, Enum):
    L2T = "l2t"  # table + logical form -> description
    LG = "lg"    # table + description -> logical form
    D2L = "d2l"  # table + topic -> logical form
    D2T = "d2t"  # table + topic -> description


@dataclass(frozen=True)
class Budgets:
    """Token budgets per serialized input. Counts are tokenizer tokens and
    approximate BPE budgets when a plain tokenizer is used."""

    total: int = 800
    content: int = 400
    lf_payload: int = 200
    text_payload: int = 50


DEFAULT_BUDGETS = Budgets()


@dataclass(frozen=True)
class SerializedInput:
    tokens: tuple[str, ...]
    segment_lengths: dict[str, int]
    truncated: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def serialize_input(
    role: Role,
    logic_type: str,
    table: Table,
    payload: str | None = None,
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> SerializedInput:
    """Serialize (type, caption, headers, content, payload) into one token stream.

    Content is row-major with a reserved delimiter between cells and is
    truncated to its own budget, as is the payload (LF or text depending on
    role); the whole stream is then clamped to the total budget. Dropped
    tokens are counted, never raised.
    """
    role = Role(role)
    if role in (Role.D2L, Role.D2T):
        if payload is not None:
            raise ValueError(f"role {role.value} takes no payload")
    elif payload is None:
        raise ValueError(f"role {role.value} requires a payload")

    content: list[str] = []
    for row in table.rows:
        for cell in row:
            if content:
                content.append(CELL_SEP)
            content.extend(tokenizer(cell.raw))
    headers: list[str] = []
    for name in table.columns:
        if headers:
            headers.append(CELL_SEP)
        headers.extend(tokenizer(name))

    segments: list[tuple[str, str, list[str], int | None]] = [
        ("type", TYPE_MARK, tokenizer(logic_type), None),
        ("caption", CAPTION_MARK, tokenizer(table.caption), None),
        ("headers", HEADERS_MARK, headers, None),
        ("content", CONTENT_MARK, content, budgets.content),
    ]
    if role is Role.L2T:
        segments.append(("payload", LF_MARK, tokenizer(payload), budgets.lf_payload))
    elif role is Role.LG:
        segments.append(("payload", TEXT_MARK, tokenizer(payload), budgets.text_payload))

    tokens: list[str] = []
    lengths: dict[str, int] = {}
    truncated = 0
    for name, marker, seg_tokens, budget in segments:
        if budget is not None and len(seg_tokens) > budget:
            truncated += len(seg_tokens) - budget
            seg_tokens = seg_tokens[:budget]
        tokens.append(marker)
        tokens.extend(seg_tokens)
        lengths[name] = len(seg_tokens)
    if len(tokens) > budgets.total:
        overflow = len(tokens) - budgets.total
        truncated += overflow
        tokens = tokens[:budgets.total]
        for name, marker, _, _ in reversed(segments):
            if overflow <= 0:
                break
            take = min(overflow, lengths[name])
            lengths[name] -= take
            overflow -= take
    return SerializedInput(tokens=tuple(tokens), segment_lengths=lengths, truncated=truncated)


@dataclass(frozen=True)
class WeightedPair:
    """One training pair; weight scales its contribution in [0, 1]."""

    source: str
    target: str
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside [0, 1]")
        if not self.target.strip():
            raise ValueError("target must be non-empty")


class ModelError(Exception):
    """A model failed to train, generate, save, or load."""


class ModelProtocolError(ModelError):
    """Wire-protocol violation: bad handshake, malformed response, timeout."""


class GenerativeModel(abc.ABC):
    """Trainable, weighted, beam-decoding text-to-text model.

    generate is deterministic between train_weighted calls; save followed by
    load restores generate behavior exactly. One in-flight call per instance.
    """

    @abc.abstractmethod
    def train_weighted(self, pairs: Sequence[WeightedPair]) -> float:
        """Train on weighted pairs; returns the reported loss."""

    @abc.abstractmethod
    def generate(self, inputs: Sequence[str], beam_size: int = 1) -> list[str]:
        """One output per input, decoded with the given beam size."""

    @abc.abstractmethod
    def save(self, path) -> None: ...

    @abc.abstractmethod
    def load(self, path) -> None: ...


class RetrievalModel(GenerativeModel):
    """Deterministic stand-in model: returns the stored target whose source
    maximizes weight x token-overlap Jaccard similarity.

    Ties break toward the earliest stored pair; a best score of 0 (empty
    store, zero weights, or no overlap) yields "". beam_size is accepted but
    only the top-1 is emitted.
    """

    def __init__(self):
        self._store: list[tuple[str, str, float]] = []

    def train_weighted(self, pairs: Sequence[WeightedPair]) -> float:
        for pair in pairs:
            self._store.append((pair.source, pair.target, pair.weight))
        return 0.0

    def generate(self, inputs: Sequence[str], beam_size: int = 1) -> list[str]:
        if beam_size < 1:
            raise ModelError(f"beam_size must be >= 1, got {beam_size}")
        outputs = []
        for text in inputs:
            tokens = set(text.split())
            best_score = 0.0
            best_target = ""
            for source, target, weight in self._store:
                source_tokens = set(source.split())
                union = tokens | source_tokens
                jaccard = len(tokens & source_tokens) / len(union) if union else 0.0
                score = weight * jaccard
                if score > best_score:
                    best_score = score
                    best_target = target
            outputs.append(best_target)
        return outputs

    def _file(self, path) -> Path:
        path = Path(path)
        if path.is_dir() or not path.suffix:
            path.mkdir(parents=True, exist_ok=True)
            return path / "retrieval.json"
        return path

    def save(self, path) -> None:
        file = self._file(path)
        file.parent.mkdir(parents=True, exist_ok=True)
        payload = [{"source": s, "target": t, "weight": w} for s, t, w in self._store]
        file.write_text(json.dumps({"pairs": payload}), encoding="utf-8")

    def load(self, path) -> None:
        file = self._file(path)
        try:
            doc = json.loads(file.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelError(f"cannot load retrieval store from {file}: {exc}") from exc
        self._store = [(p["source"], p["target"], float(p["weight"])) for p in doc["pairs"]]


def retrieval_model() -> RetrievalModel:
    return RetrievalModel()


class _Connection:
    """One line-delimited JSON channel, over a child process or a TCP socket."""

    def __init__(self, *, process=None, sock=None, timeout: float = 60.0):
        self.process = process
        self.sock = sock
        self.timeout = timeout
        if sock is not None:
            sock.settimeout(timeout)
            self._reader = sock.makefile("r", encoding="utf-8", newline="\n")
            self._writer = sock.makefile("w", encoding="utf-8", newline="\n")
        else:
            self._reader = process.stdout
            self._writer = process.stdin

    def send_line(self, line: str) -> None:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
        except (OSError, ValueError, BrokenPipeError) as exc:
            raise ModelProtocolError(f"cannot write to model endpoint: {exc}") from exc

    def read_line(self) -> str:
        if self.process is not None:
            ready, _, _ = select.select([self._reader], [], [], self.timeout)
            if not ready:
                raise ModelProtocolError(f"timeout after {self.timeout}s waiting for response")
        try:
            line = self._reader.readline()
        except (OSError, socket.timeout) as exc:
            raise ModelProtocolError(f"cannot read from model endpoint: {exc}") from exc
        if not line:
            raise ModelProtocolError("model endpoint closed the stream")
        return line

    def close(self) -> None:
        if self.sock is not None:
            try:
                self._reader.close()
                self._writer.close()
                self.sock.close()
            except OSError:
                pass
        if self.process is not None:
            try:
                self.process.stdin.close()
            except OSError:
                pass
            try:
                self.process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.process.kill()


class ExternalModel(GenerativeModel):
    """Proxy to a model speaking the wire protocol over stdio or TCP.

    Messages are one JSON object per line, UTF-8, with strictly increasing
    ids; every request receives exactly one response with a matching id.
    """

    def __init__(self, connection: _Connection):
        self._conn = connection
        self._next_id = 0
        hello = self._call({"op": "hello"})
        version = hello.get("version")
        if version != PROTOCOL_VERSION:
            self.close()
            raise ModelProtocolError(
                f"handshake mismatch: server speaks version {version!r}, want {PROTOCOL_VERSION}")

    @classmethod
    def launch(cls, command: Sequence[str], timeout: float = 60.0) -> "ExternalModel":
        try:
            process = subprocess.Popen(
                list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1,
            )
        except OSError as exc:
            raise ModelProtocolError(f"cannot launch {command!r}: {exc}") from exc
        return cls(_Connection(process=process, timeout=timeout))

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 60.0) -> "ExternalModel":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ModelProtocolError(f"cannot connect to {host}:{port}: {exc}") from exc
        return cls(_Connection(sock=sock, timeout=timeout))

    def _call(self, message: dict) -> dict:
        request_id = self._next_id
        self._next_id += 1
        request = {"id": request_id, **message}
        self._conn.send_line(json.dumps(request, ensure_ascii=False))
        line = self._conn.read_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ModelProtocolError(f"malformed response (not JSON): {line!r}") from exc
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise ModelProtocolError(
                f"response id {response.get('id') if isinstance(response, dict) else None!r} "
                f"does not match request id {request_id}")
        if not response.get("ok"):
            raise ModelError(f"model error: {response.get('error', 'unknown')}")
        return response

    def train_weighted(self, pairs: Sequence[WeightedPair]) -> float:
        payload = [{"source": p.source, "target": p.target, "weight": p.weight} for p in pairs]
        response = self._call({"op": "train", "pairs": payload})
        return float(response.get("loss", 0.0))

    def generate(self, inputs: Sequence[str], beam_size: int = 1) -> list[str]:
        response = self._call({"op": "generate", "inputs": list(inputs), "beam_size": beam_size})
        outputs = response.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(inputs):
            raise ModelProtocolError(
                f"expected {len(inputs)} outputs, got {outputs if not isinstance(outputs, list) else len(outputs)}")
        return [str(o) for o in outputs]

    def save(self, path) -> None:
        self._call({"op": "save", "path": str(path)})

    def load(self, path) -> None:
        self._call({"op": "load", "path": str(path)})

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "ExternalModel":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_model(spec: dict, timeout: float = 60.0) -> ExternalModel:
    """Build a proxy from a launch/connect descriptor.

    {"command": [...]} launches a child process speaking the protocol over its
    standard streams; {"endpoint": "host:port"} connects over TCP.
    """
    if "command" in spec:
        return ExternalModel.launch(spec["command"], timeout=spec.get("timeout", timeout))
    if "endpoint" in spec:
        host, _, port = str(spec["endpoint"]).rpartition(":")
        if not host or not port.isdigit():
            raise ModelProtocolError(f"bad endpoint {spec['endpoint']!r}, want host:port")
        return ExternalModel.connect(host, int(port), timeout=spec.get("timeout", timeout))
    raise ModelProtocolError(f"model spec needs 'command' or 'endpoint': {spec!r}")


def build_model(spec: dict) -> GenerativeModel:
    """Build a model from a config spec: {"kind": "retrieval"} or
    {"kind": "external", ...}."""
    kind = spec.get("kind", "retrieval")
    if kind == "retrieval":
        return retrieval_model()
    if kind == "external":
        return external_model(spec)
    raise ModelError(f"unknown model kind {kind!r}")


def build_teacher_model(spec: dict) -> GenerativeModel:
    """Build the teacher counterpart for a model spec.

    Retrieval teachers are fresh instances; external command specs launch a
    second process; external endpoint specs need an explicit
    "teacher_endpoint" (a running server cannot be cloned in-protocol).
    """
    kind = spec.get("kind", "retrieval")
    if kind == "retrieval":
        return retrieval_model()
    if kind == "external":
        if "command" in spec:
            return external_model(spec)
        if "teacher_endpoint" in spec:
            return external_model({**spec, "endpoint": spec["teacher_endpoint"]})
        raise ModelProtocolError(
            "external endpoint spec needs 'teacher_endpoint' for the teacher copy")
    raise ModelError(f"unknown model kind {kind!r}")


def close_model(model: GenerativeModel) -> None:
    """Release a model's resources if it holds any (external processes)."""
    close = getattr(model, "close", None)
    if callable(close):
        close()


def sync_teacher(student: GenerativeModel, teacher: GenerativeModel) -> None:
    """Make teacher.generate behave exactly like student.generate (save + load)."""
    scratch = Path(tempfile.mkdtemp(prefix="logicloom-sync-"))
    try:
        student.save(scratch)
        teacher.load(scratch)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
