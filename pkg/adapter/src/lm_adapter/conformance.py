"""Transcript replay: check a server's responses against a recorded exchange.

A transcript is JSON lines alternating request, expected-response. Structural
equality is what matters: matching ids, matching ok flags, and matching
output counts; numeric values such as losses may differ between model
implementations.
"""

from __future__ import annotations

import json
import select
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ConformanceResult:
    ok: bool
    exchanges: int
    message: str = ""


def load_transcript(path) -> list[tuple[dict, dict]]:
    lines = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()
             if line.strip()]
    if len(lines) % 2 != 0:
        raise ValueError("transcript must alternate request and response lines")
    return [(lines[i], lines[i + 1]) for i in range(0, len(lines), 2)]


def structurally_equal(expected: dict, actual: dict) -> str:
    if actual.get("id") != expected.get("id"):
        return f"id {actual.get('id')!r} != {expected.get('id')!r}"
    if bool(actual.get("ok")) != bool(expected.get("ok")):
        return f"ok {actual.get('ok')!r} != {expected.get('ok')!r}"
    if "outputs" in expected:
        got = actual.get("outputs")
        if not isinstance(got, list) or len(got) != len(expected["outputs"]):
            return f"expected {len(expected['outputs'])} outputs, got {got!r}"
    if "version" in expected and actual.get("version") != expected["version"]:
        return f"version {actual.get('version')!r} != {expected['version']!r}"
    if expected.get("ok") and "loss" in expected and not isinstance(
            actual.get("loss"), (int, float)):
        return f"loss missing or non-numeric: {actual.get('loss')!r}"
    return ""


def run_conformance(transcript_path, command, timeout: float = 300.0) -> ConformanceResult:
    """Replay a transcript against a freshly launched server command.

    The literal "{TMPDIR}" in request path values is replaced with a fresh
    temporary directory so recorded save/load exchanges stay portable.
    """
    exchanges = load_transcript(transcript_path)
    scratch = tempfile.mkdtemp(prefix="lm-adapter-conformance-")
    process = subprocess.Popen(list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                               text=True, encoding="utf-8", bufsize=1)
    try:
        for index, (request, expected) in enumerate(exchanges):
            if isinstance(request.get("path"), str):
                request = {**request, "path": request["path"].replace("{TMPDIR}", scratch)}
            process.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
            process.stdin.flush()
            ready, _, _ = select.select([process.stdout], [], [], timeout)
            if not ready:
                return ConformanceResult(False, index, f"timeout at exchange {index}")
            line = process.stdout.readline()
            if not line:
                return ConformanceResult(False, index, f"server closed at exchange {index}")
            try:
                actual = json.loads(line)
            except json.JSONDecodeError:
                return ConformanceResult(False, index,
                                         f"non-JSON response at exchange {index}: {line!r}")
            problem = structurally_equal(expected, actual)
            if problem:
                return ConformanceResult(False, index,
                                         f"mismatch at exchange {index}: {problem}")
        return ConformanceResult(True, len(exchanges))
    finally:
        try:
            process.stdin.close()
            process.wait(timeout=10)
        except Exception:
            process.kill()
