"""Evaluation measures: corpus BLEU-4, ROUGE-1/2/4/L, logical-form accuracy,
execution accuracy, and the greedy-match embedding F1 used for round-trip
weighting.

BLEU is corpus-level with uniform 1..4-gram weights, clipped counts, a
brevity penalty, and no smoothing, on a 0..100 scale with exactly one
reference per candidate. ROUGE variants report pair-averaged F1 in [0, 1].
"""

from __future__ import annotations

import math
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .dsl import LfExecError, LfParseError, canonical_lf, execute_lf, parse_lf, validate_lf
from .tables import Table

Tokens = Sequence[str]


class Embedder(Protocol):
    """Deterministic token embedding with a fixed dimension."""

    dim: int

    def embed(self, token: str) -> np.ndarray: ...


class BuiltinEmbedder:
    """L2-normalized hashed character-trigram counts; dimension 512, fixed seed."""

    def __init__(self, dim: int = 512, seed: int = 2654435761):
        self.dim = dim
        self._seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f"^{token.lower()}$"
        for i in range(len(padded) - 2):
            bucket = zlib.crc32(padded[i:i + 3].encode("utf-8"), self._seed) % self.dim
            vec[bucket] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        vec.setflags(write=False)
        self._cache[token] = vec
        return vec


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidates: Sequence[Tokens], references: Sequence[Tokens]) -> float:
    """Corpus BLEU with one reference per candidate, scale 0..100, no smoothing."""
    if len(candidates) != len(references):
        raise ValueError(f"length mismatch: {len(candidates)} candidates, {len(references)} references")
    correct = [0] * 4
    total = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        if not ref:
            raise ValueError("empty reference")
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_grams = _ngrams(cand, n)
            total[n - 1] += max(len(cand) - n + 1, 0)
            correct[n - 1] += sum((cand_grams & _ngrams(ref, n)).values())
    if cand_len == 0 or any(c == 0 for c in correct) or any(t == 0 for t in total):
        return 0.0
    log_precision = sum(math.log(c / t) for c, t in zip(correct, total)) / 4.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * brevity * math.exp(log_precision)


def _lcs_len(a: Tokens, b: Tokens) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge(candidates: Sequence[Tokens], references: Sequence[Tokens], variant) -> float:
    """ROUGE-N overlap F1 (variant 1, 2, or 4) or LCS-based ROUGE-L, pair-averaged."""
    if len(candidates) != len(references):
        raise ValueError(f"length mismatch: {len(candidates)} candidates, {len(references)} references")
    if not candidates:
        raise ValueError("no pairs")
    variant = str(variant).lower()
    scores = []
    for cand, ref in zip(candidates, references):
        if variant == "l":
            if not cand or not ref:
                scores.append(1.0 if list(cand) == list(ref) else 0.0)
                continue
            lcs = _lcs_len(cand, ref)
            scores.append(_f1(lcs / len(cand), lcs / len(ref)))
        else:
            n = int(variant)
            cand_grams = _ngrams(cand, n)
            ref_grams = _ngrams(ref, n)
            cand_total = sum(cand_grams.values())
            ref_total = sum(ref_grams.values())
            if cand_total == 0 and ref_total == 0:
                # both too short for this order: perfect iff token-identical
                scores.append(1.0 if list(cand) == list(ref) else 0.0)
                continue
            if cand_total == 0 or ref_total == 0:
                scores.append(0.0)
                continue
            overlap = sum((cand_grams & ref_grams).values())
            scores.append(_f1(overlap / cand_total, overlap / ref_total))
    return sum(scores) / len(scores)


def lf_accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    """Fraction of canonicalized predictions exactly matching canonicalized golds."""
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(golds)} golds")
    if not predictions:
        raise ValueError("no pairs")
    hits = sum(1 for p, g in zip(predictions, golds) if canonical_lf(p) == canonical_lf(g))
    return hits / len(predictions)


def execution_outcome(prediction: str, table: Table, mode: str = "truthy") -> bool:
    """Whether one predicted LF parses, type-checks, and executes acceptably.

    mode "truthy" requires a Bool(true) root; mode "error-free" accepts any
    error-free execution with a Boolean root.
    """
    if mode not in ("truthy", "error-free"):
        raise ValueError(f"unknown exec mode {mode!r}")
    try:
        ast = parse_lf(prediction)
    except LfParseError:
        return False
    if not validate_lf(ast, table).structurally_valid:
        return False
    try:
        result = execute_lf(ast, table)
    except LfExecError:
        return False
    if mode == "truthy":
        return result.is_true()
    return result.kind == "bool"


def exec_accuracy(predictions: Sequence[str], tables: Sequence[Table], mode: str = "truthy") -> float:
    """Fraction of predictions executing acceptably on their tables."""
    if len(predictions) != len(tables):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(tables)} tables")
    if not predictions:
        raise ValueError("no pairs")
    hits = sum(1 for p, t in zip(predictions, tables) if execution_outcome(p, t, mode))
    return hits / len(predictions)


def greedy_match_f1(candidate: Tokens, reference: Tokens, embedder: Embedder) -> float:
    """Greedy max-cosine token matching F1, clamped to [0, 1]."""
    if not candidate or not reference:
        raise ValueError("token sequences must be non-empty")
    cand = np.stack([embedder.embed(t) for t in candidate])
    ref = np.stack([embedder.embed(t) for t in reference])
    cand_norm = np.linalg.norm(cand, axis=1, keepdims=True)
    ref_norm = np.linalg.norm(ref, axis=1, keepdims=True)
    sim = np.divide(cand, np.where(cand_norm == 0, 1.0, cand_norm)) @ np.divide(
        ref, np.where(ref_norm == 0, 1.0, ref_norm)).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    return min(1.0, max(0.0, _f1(precision, recall)))


@dataclass
class EvalBundle:
    """One evaluation sweep; text metrics plus LF metrics over n samples."""

    n: int
    bleu4: float | None = None
    rouge1: float | None = None
    rouge2: float | None = None
    rouge4: float | None = None
    rougeL: float | None = None
    lf_acc: float | None = None
    exec_acc: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name, hi in (("bleu4", 100.0), ("rouge1", 1.0), ("rouge2", 1.0), ("rouge4", 1.0),
                         ("rougeL", 1.0), ("lf_acc", 1.0), ("exec_acc", 1.0)):
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= hi):
                raise ValueError(f"{name}={value} outside [0, {hi}]")

    def to_json(self) -> dict:
        return {
            "n": self.n, "bleu4": self.bleu4, "rouge1": self.rouge1, "rouge2": self.rouge2,
            "rouge4": self.rouge4, "rougeL": self.rougeL, "lf_acc": self.lf_acc,
            "exec_acc": self.exec_acc,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EvalBundle":
        return cls(**{k: doc.get(k) for k in
                      ("n", "bleu4", "rouge1", "rouge2", "rouge4", "rougeL", "lf_acc", "exec_acc")})

    def format_table(self) -> str:
        rows = [("metric", "value")]
        for name in ("bleu4", "rouge1", "rouge2", "rouge4", "rougeL", "lf_acc", "exec_acc"):
            value = getattr(self, name)
            rows.append((name, "-" if value is None else f"{value:.4f}"))
        rows.append(("n", str(self.n)))
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
