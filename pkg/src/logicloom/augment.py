"""Topic-conditioned data augmentation: run table-to-logic / table-to-text
models over every (table, topic) pair, filter by length and duplication, and
report quality of the kept items.

The text topic classifier here is keyword-based, a documented approximation
of a learned classifier; the LF side uses the deterministic rule classifier
from the DSL package.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

from .dsl import LfExecError, LfParseError, classify_lf_topic, execute_lf, parse_lf, validate_lf
from .metrics import execution_outcome
from .models import GenerativeModel, ModelError, Role, serialize_input
from .tables import LOGIC_TYPES, Corpus, Table
from .tokenize import whitespace_tokenize

logger = logging.getLogger(__name__)

MAX_CANDIDATE_TOKENS = 200

KEEP = "keep"
DROP_LENGTH = "length"
DROP_DUPLICATE = "duplicate"


@dataclass(frozen=True)
class UnpairedLf:
    logic_type: str
    table: Table
    lf: str

    @property
    def kind(self) -> str:
        return "lf"

    @property
    def value(self) -> str:
        return self.lf


@dataclass(frozen=True)
class UnpairedText:
    logic_type: str
    table: Table
    text: str

    @property
    def kind(self) -> str:
        return "text"

    @property
    def value(self) -> str:
        return self.text


UnpairedItem = Union[UnpairedLf, UnpairedText]


@dataclass
class AugmentStats:
    generated: int = 0
    kept: int = 0
    dropped_length: int = 0
    dropped_duplicate: int = 0
    dropped_duplicate_within: int = 0  # subset of dropped_duplicate
    per_topic_kept: dict[str, int] = field(default_factory=lambda: {t: 0 for t in LOGIC_TYPES})

    def check(self) -> None:
        if self.generated != self.kept + self.dropped_length + self.dropped_duplicate:
            raise AssertionError(f"augment accounting broken: {self}")

    def to_json(self) -> dict:
        self.check()
        return {
            "schema": "logicloom/augment-stats-v1",
            "generated": self.generated,
            "kept": self.kept,
            "dropped_length": self.dropped_length,
            "dropped_duplicate": self.dropped_duplicate,
            "dropped_duplicate_within": self.dropped_duplicate_within,
            "per_topic_kept": dict(self.per_topic_kept),
        }


class AugmentError(ModelError):
    """Model failure during augmentation; carries partial items and stats."""

    def __init__(self, message: str, items: list, stats: AugmentStats):
        self.items = items
        self.stats = stats
        super().__init__(message)


def _training_values(training_corpus: Corpus | None, kind: str) -> set[str]:
    if training_corpus is None:
        return set()
    if kind == "lf":
        return {inst.lf.strip() for inst in training_corpus.instances}
    return {inst.text.strip() for inst in training_corpus.instances}


def filter_item(
    candidate: str,
    training_corpus: Corpus | None,
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
    kind: str = "lf",
    max_tokens: int = MAX_CANDIDATE_TOKENS,
) -> str:
    """keep | length | duplicate, per the augmentation filters."""
    if len(tokenizer(candidate)) > max_tokens:
        return DROP_LENGTH
    if candidate.strip() in _training_values(training_corpus, kind):
        return DROP_DUPLICATE
    return KEEP


def topicda(
    tables: dict[str, Table] | Sequence[Table],
    model: GenerativeModel,
    role: Role,
    training_corpus: Corpus | None,
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
    beam_size: int = 3,
    max_tokens: int = MAX_CANDIDATE_TOKENS,
) -> tuple[list[UnpairedItem], AugmentStats]:
    """Generate one candidate per (table, topic), filter, and deduplicate.

    Iteration order is table id then the fixed topic order, so runs are
    reproducible given a deterministic model. Kept items are also
    deduplicated against one another (first occurrence wins).
    """
    role = Role(role)
    if role not in (Role.D2L, Role.D2T):
        raise ValueError(f"topicda needs a d2l or d2t model, got role {role.value}")
    kind = "lf" if role is Role.D2L else "text"
    table_list = sorted(tables.values() if isinstance(tables, dict) else tables, key=lambda t: t.id)
    existing = _training_values(training_corpus, kind)

    items: list[UnpairedItem] = []
    stats = AugmentStats()
    seen: set[str] = set()
    for table in table_list:
        for topic in LOGIC_TYPES:
            source = serialize_input(role, topic, table, None, tokenizer=tokenizer).text
            try:
                candidate = model.generate([source], beam_size)[0]
            except ModelError as exc:
                stats.check()
                raise AugmentError(
                    f"model failure on table {table.id!r} topic {topic!r}: {exc}", items, stats,
                ) from exc
            stats.generated += 1
            if len(tokenizer(candidate)) > max_tokens:
                stats.dropped_length += 1
                continue
            trimmed = candidate.strip()
            if trimmed in existing:
                stats.dropped_duplicate += 1
                continue
            if trimmed in seen:
                stats.dropped_duplicate += 1
                stats.dropped_duplicate_within += 1
                continue
            seen.add(trimmed)
            stats.kept += 1
            stats.per_topic_kept[topic] += 1
            if kind == "lf":
                items.append(UnpairedLf(topic, table, candidate))
            else:
                items.append(UnpairedText(topic, table, candidate))
    stats.check()
    return items, stats


# ---- text topic classification (keyword approximation) ----------------------

_MAJORITY = re.compile(r"\b(most of|all of|majority)\b")
_ORDINAL = re.compile(r"\b\d+(st|nd|rd|th)\b|\b(second|third|fourth|fifth) (highest|lowest)\b")
_UNIQUE = re.compile(r"\bonly\b")
_AGGREGATION = re.compile(r"\b(average|total|sum|combined|overall)\b")
_SUPERLATIVE = re.compile(
    r"\b(highest|lowest|most|least|best|worst|largest|smallest|earliest|latest"
    r"|maximum|minimum|top|first|last|\w{3,}est)\b")
_COMPARATIVE = re.compile(r"\b\w+er\s+than\b|\bmore\b.*\bthan\b|\bless\b.*\bthan\b|\bdifference\s+between\b")


def classify_text_topic(text: str) -> str:
    """Keyword classification of a description's logic type; total."""
    text = text.lower()
    if _MAJORITY.search(text):
        return "majority"
    if _ORDINAL.search(text):
        return "ordinal"
    if _UNIQUE.search(text):
        return "unique"
    if _AGGREGATION.search(text):
        return "aggregation"
    if _SUPERLATIVE.search(text):
        return "superlative"
    if _COMPARATIVE.search(text):
        return "comparative"
    return "count"


# ---- quality report ----------------------------------------------------------


@dataclass
class QualityReport:
    n_lfs: int = 0
    n_texts: int = 0
    lf_parseable: float | None = None      # parse into valid logical forms
    lf_executable: float | None = None     # execute to a Boolean result, error-free
    lf_factual: float | None = None        # execute to true
    text_factual: float | None = None      # back-translated LF executes to true
    lf_topic_consistency: float | None = None
    text_topic_consistency: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": "logicloom/quality-report-v1",
            "n_lfs": self.n_lfs, "n_texts": self.n_texts,
            "lf_parseable": self.lf_parseable, "lf_executable": self.lf_executable,
            "lf_factual": self.lf_factual, "text_factual": self.text_factual,
            "lf_topic_consistency": self.lf_topic_consistency,
            "text_topic_consistency": self.text_topic_consistency,
            "notes": list(self.notes),
        }


def _frac(hits: int, total: int) -> float | None:
    return hits / total if total else None


def quality_report(
    unpaired_lfs: Sequence[UnpairedLf],
    unpaired_texts: Sequence[UnpairedText],
    lg_model: GenerativeModel | None = None,
    beam_size: int = 3,
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
) -> QualityReport:
    """Validity, factual correctness, and topic consistency of augmented data.

    Text factual accuracy back-translates each description to an LF with the
    given model and executes it; a model failure aborts only that part.
    """
    report = QualityReport(n_lfs=len(unpaired_lfs), n_texts=len(unpaired_texts))
    parseable = executable = factual = lf_consistent = 0
    for item in unpaired_lfs:
        try:
            ast = parse_lf(item.lf)
        except LfParseError:
            continue
        if not validate_lf(ast, item.table).structurally_valid:
            continue
        parseable += 1
        if classify_lf_topic(ast) == item.logic_type:
            lf_consistent += 1
        try:
            result = execute_lf(ast, item.table)
        except LfExecError:
            continue
        if result.kind == "bool":
            executable += 1
            if result.value is True:
                factual += 1
    report.lf_parseable = _frac(parseable, report.n_lfs)
    report.lf_executable = _frac(executable, report.n_lfs)
    report.lf_factual = _frac(factual, report.n_lfs)
    report.lf_topic_consistency = _frac(lf_consistent, report.n_lfs)

    text_consistent = sum(
        1 for item in unpaired_texts if classify_text_topic(item.text) == item.logic_type)
    report.text_topic_consistency = _frac(text_consistent, report.n_texts)

    if unpaired_texts and lg_model is not None:
        try:
            sources = [serialize_input(Role.LG, it.logic_type, it.table, it.text,
                                       tokenizer=tokenizer).text for it in unpaired_texts]
            predictions = lg_model.generate(sources, beam_size)
            hits = sum(1 for pred, it in zip(predictions, unpaired_texts)
                       if execution_outcome(pred, it.table, mode="truthy"))
            report.text_factual = _frac(hits, report.n_texts)
        except ModelError as exc:
            report.notes.append(f"text factual accuracy skipped: {exc}")
            logger.warning("quality_report: back-translation failed: %s", exc)
    return report


# ---- persistence --------------------------------------------------------------


def save_unpaired(items: Sequence[UnpairedItem], path) -> None:
    """JSON-lines, one object per item: {logic_type, table_id, kind, value}."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps({
                "logic_type": item.logic_type,
                "table_id": item.table.id,
                "kind": item.kind,
                "value": item.value,
            }, ensure_ascii=False) + "\n")


def load_unpaired(path, tables: dict[str, Table]) -> list[UnpairedItem]:
    items: list[UnpairedItem] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            table = tables[doc["table_id"]]
            if doc["kind"] == "lf":
                items.append(UnpairedLf(doc["logic_type"], table, doc["value"]))
            else:
                items.append(UnpairedText(doc["logic_type"], table, doc["value"]))
    return items
