"""The wire-protocol request loop: newline-delimited JSON over stdio or TCP.

One request in flight at a time; every line gets exactly one response with
the request's id; malformed input produces an error response, never a crash.
"""

from __future__ import annotations

import json
import logging
import socket
import sys

from .config import AdapterConfig
from .model import WeightedLmModel

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


def handle_request(model: WeightedLmModel, line: str) -> dict:
    request_id = None
    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ValueError("request must be a JSON object")
        request_id = request.get("id")
        op = request.get("op")
        if op == "hello":
            return {"id": request_id, "ok": True, "version": PROTOCOL_VERSION}
        if op == "train":
            pairs = request["pairs"]
            for pair in pairs:
                weight = float(pair.get("weight", 1.0))
                if not 0.0 <= weight <= 1.0:
                    raise ValueError(f"weight {weight} outside [0, 1]")
            loss = model.train_pairs(pairs)
            return {"id": request_id, "ok": True, "loss": loss}
        if op == "generate":
            outputs = model.generate([str(s) for s in request["inputs"]],
                                     int(request.get("beam_size", 1)))
            return {"id": request_id, "ok": True, "outputs": outputs}
        if op == "save":
            model.save(request["path"])
            return {"id": request_id, "ok": True}
        if op == "load":
            model.load(request["path"])
            return {"id": request_id, "ok": True}
        raise ValueError(f"unknown op {op!r}")
    except Exception as exc:  # protocol guarantee: errors become responses
        logger.warning("request failed: %s", exc)
        return {"id": request_id, "ok": False, "error": str(exc)}


def serve_stream(model: WeightedLmModel, reader, writer) -> None:
    for line in reader:
        if not line.strip():
            continue
        response = handle_request(model, line)
        writer.write(json.dumps(response, ensure_ascii=False) + "\n")
        writer.flush()


def serve(config: AdapterConfig, tcp_port: int | None = None, host: str = "127.0.0.1") -> None:
    model = WeightedLmModel(config)
    if tcp_port is None:
        serve_stream(model, sys.stdin, sys.stdout)
        return
    with socket.create_server((host, tcp_port)) as server:
        sys.stdout.write(f"listening {server.getsockname()[1]}\n")
        sys.stdout.flush()
        conn, _ = server.accept()
        with conn, conn.makefile("r", encoding="utf-8") as reader, \
                conn.makefile("w", encoding="utf-8") as writer:
            serve_stream(model, reader, writer)
