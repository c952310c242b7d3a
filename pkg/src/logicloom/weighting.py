"""Round-trip data weighting and curriculum ordering of augmented items.

Each unpaired item is translated forward and back through the current model
pair; the greedy-match embedding F1 between the reconstruction and the
original becomes the item's training weight. Soft weighting only: weight-0
items stay in the stream.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .augment import UnpairedItem, UnpairedLf, UnpairedText
from .dsl import canonical_lf
from .metrics import BuiltinEmbedder, Embedder, greedy_match_f1
from .models import GenerativeModel, ModelError, Role, serialize_input
from .tables import Table
from .tokenize import text_tokenize, whitespace_tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedItem:
    """An unpaired item with its round-trip weight and translation audit trail."""

    item: UnpairedItem
    weight: float
    forward: str = ""
    round_trip: str = ""

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside [0, 1]")


def _lf_tokens(surface: str) -> list[str]:
    return canonical_lf(surface).split()


def _score(original_tokens: list[str], reconstruction_tokens: list[str], embedder: Embedder) -> float:
    if not original_tokens or not reconstruction_tokens:
        return 0.0
    return greedy_match_f1(reconstruction_tokens, original_tokens, embedder)


def _round_trip(
    item: UnpairedItem,
    first: GenerativeModel,
    second: GenerativeModel,
    first_role: Role,
    second_role: Role,
    beam_size: int,
    tokenizer,
) -> tuple[str, str]:
    source = serialize_input(first_role, item.logic_type, item.table, item.value,
                             tokenizer=tokenizer).text
    forward = first.generate([source], beam_size)[0]
    back_source = serialize_input(second_role, item.logic_type, item.table, forward,
                                  tokenizer=tokenizer).text
    reconstruction = second.generate([back_source], beam_size)[0]
    return forward, reconstruction


def _weight_items(
    items: Sequence[UnpairedItem],
    first: GenerativeModel,
    second: GenerativeModel,
    first_role: Role,
    second_role: Role,
    score_tokens: Callable[[str], list[str]],
    embedder: Embedder,
    beam_size: int,
    tokenizer,
) -> list[WeightedItem]:
    weighted: list[WeightedItem] = []
    for item in items:
        try:
            forward, reconstruction = _round_trip(
                item, first, second, first_role, second_role, beam_size, tokenizer)
        except ModelError as exc:
            logger.warning("round trip failed for %s item on table %s: %s; weight set to 0",
                           item.kind, item.table.id, exc)
            weighted.append(WeightedItem(item, 0.0))
            continue
        weight = _score(score_tokens(item.value), score_tokens(reconstruction), embedder)
        weighted.append(WeightedItem(item, min(1.0, max(0.0, weight)), forward, reconstruction))
    return weighted


def weight_lfs(
    unpaired_lfs: Sequence[UnpairedLf],
    l2t: GenerativeModel,
    lg: GenerativeModel,
    embedder: Embedder | None = None,
    beam_size: int = 3,
    tokenizer=whitespace_tokenize,
) -> list[WeightedItem]:
    """Weight = F1 between an LF and its text->LF reconstruction, over canonical
    LF tokens. Model failure weights the item 0 with a warning."""
    return _weight_items(unpaired_lfs, l2t, lg, Role.L2T, Role.LG,
                         _lf_tokens, embedder or BuiltinEmbedder(), beam_size, tokenizer)


def weight_texts(
    unpaired_texts: Sequence[UnpairedText],
    l2t: GenerativeModel,
    lg: GenerativeModel,
    embedder: Embedder | None = None,
    beam_size: int = 3,
    tokenizer=whitespace_tokenize,
) -> list[WeightedItem]:
    """Symmetric to weight_lfs: text -> LF -> text, scored over text tokens."""
    return _weight_items(unpaired_texts, lg, l2t, Role.LG, Role.L2T,
                         text_tokenize, embedder or BuiltinEmbedder(), beam_size, tokenizer)


def curriculum_sort(weighted: Sequence[WeightedItem]) -> list[WeightedItem]:
    """Stable sort by weight descending; ties keep the original order."""
    return sorted(weighted, key=lambda w: -w.weight)


def weight_stats(weighted: Sequence) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation of the weights."""
    if not weighted:
        raise ValueError("no weights")
    values = [w.weight if isinstance(w, WeightedItem) else float(w) for w in weighted]
    mean = sum(values) / len(values)
    variance = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(variance)


def save_weighted(weighted: Sequence[WeightedItem], path) -> None:
    """JSON-lines extending the augment format with weight/forward/round_trip."""
    with open(path, "w", encoding="utf-8") as fh:
        for w in weighted:
            fh.write(json.dumps({
                "logic_type": w.item.logic_type,
                "table_id": w.item.table.id,
                "kind": w.item.kind,
                "value": w.item.value,
                "weight": w.weight,
                "forward": w.forward,
                "round_trip": w.round_trip,
            }, ensure_ascii=False) + "\n")


def load_weighted(path, tables: dict[str, Table]) -> list[WeightedItem]:
    weighted: list[WeightedItem] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            table = tables[doc["table_id"]]
            if doc["kind"] == "lf":
                item: UnpairedItem = UnpairedLf(doc["logic_type"], table, doc["value"])
            else:
                item = UnpairedText(doc["logic_type"], table, doc["value"])
            weighted.append(WeightedItem(item, float(doc["weight"]),
                                         doc.get("forward", ""), doc.get("round_trip", "")))
    return weighted
