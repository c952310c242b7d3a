"""Reference wire-protocol server hosting the built-in retrieval model.

Speaks the newline-delimited JSON protocol over stdio (default) or a TCP
socket: hello, train, generate, save, load. One request in flight at a time;
malformed input gets an error response instead of crashing the process.

Run as `python -m logicloom.serve` or `logicloom serve`.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from .models import PROTOCOL_VERSION, GenerativeModel, ModelError, WeightedPair, retrieval_model


def handle_request(model: GenerativeModel, line: str) -> dict:
    """One response per request line; never raises."""
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
            pairs = [WeightedPair(str(p["source"]), str(p["target"]), float(p.get("weight", 1.0)))
                     for p in request["pairs"]]
            loss = model.train_weighted(pairs)
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
    except (ValueError, KeyError, TypeError, ModelError) as exc:
        return {"id": request_id, "ok": False, "error": str(exc)}


def serve_stream(model: GenerativeModel, reader, writer) -> None:
    for line in reader:
        if not line.strip():
            continue
        response = handle_request(model, line)
        writer.write(json.dumps(response, ensure_ascii=False) + "\n")
        writer.flush()


def serve_tcp(model: GenerativeModel, host: str, port: int, ready_out=None) -> None:
    with socket.create_server((host, port)) as server:
        if ready_out is not None:
            ready_out.write(f"listening {server.getsockname()[1]}\n")
            ready_out.flush()
        conn, _ = server.accept()
        with conn, conn.makefile("r", encoding="utf-8") as reader, \
                conn.makefile("w", encoding="utf-8") as writer:
            serve_stream(model, reader, writer)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="logicloom.serve",
                                     description="Serve a retrieval model over the wire protocol.")
    parser.add_argument("--tcp", type=int, metavar="PORT",
                        help="listen on a TCP port instead of stdio (0 picks a free port)")
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    model = retrieval_model()
    if args.tcp is not None:
        serve_tcp(model, args.host, args.tcp, ready_out=sys.stdout)
    else:
        serve_stream(model, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
