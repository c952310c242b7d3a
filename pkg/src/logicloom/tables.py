"""Tables, typed cells, and corpus ingestion.

A cell keeps its raw text verbatim and gets a deterministic typed reading
(number, date, or text) that the executor's matching rules build on. Tables
are rectangular and immutable; corpora bundle tables with supervised
(logic_type, table, lf, text) instances.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

LOGIC_TYPES = (
    "count",
    "comparative",
    "superlative",
    "unique",
    "ordinal",
    "aggregation",
    "majority",
)

CORPUS_SCHEMA = "logicloom/corpus-v1"

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
}
_MONTH_PREFIXES = {name[:3]: num for name, num in _MONTHS.items()}

_THOUSANDS = re.compile(r"(?<=\d),(?=\d)")
_NUMERAL = re.compile(r"[+-]?(?:\d+(?:\.\d+)?|\.\d+)")


class CorpusError(ValueError):
    """Raised when a table or corpus violates its invariants."""


@dataclass(frozen=True)
class CellValue:
    """Typed reading of one cell. `raw` is preserved verbatim."""

    raw: str
    kind: str  # "number" | "date" | "text"
    number: float | None = None
    date: tuple[int | None, int, int] | None = None  # (year or None, month, day)

    @property
    def norm(self) -> str:
        return " ".join(self.raw.lower().split())

    def date_key(self) -> tuple[int, int, int] | None:
        if self.date is None:
            return None
        year, month, day = self.date
        return (year or 0, month, day)


def _month_number(token: str) -> int | None:
    token = token.strip(".").lower()
    if token in _MONTHS:
        return _MONTHS[token]
    return _MONTH_PREFIXES.get(token)


def _parse_date(text: str) -> tuple[int | None, int, int] | None:
    # "{year} - {month} - {day}" with a 4-digit year; checked on the raw
    # hyphen split so score-like cells ("3 - 1") never qualify.
    if "-" in text:
        parts = [p.strip() for p in text.split("-")]
        if len(parts) == 3 and all(p.isdigit() for p in parts) and len(parts[0]) == 4:
            year, month, day = (int(p) for p in parts)
            if 1 <= month <= 12 and 1 <= day <= 31:
                return (year, month, day)
        return None
    tokens = [t for t in text.replace(",", " ").split()]
    if len(tokens) not in (2, 3):
        return None
    month = _month_number(tokens[0])
    if month is None or not tokens[1].isdigit():
        return None
    day = int(tokens[1])
    if not 1 <= day <= 31:
        return None
    if len(tokens) == 2:
        return (None, month, day)
    if tokens[2].isdigit() and 1 <= int(tokens[2]) <= 9999:
        return (int(tokens[2]), month, day)
    return None


def _parse_number(text: str) -> float | None:
    stripped = _THOUSANDS.sub("", text)
    match = _NUMERAL.search(stripped)
    return float(match.group()) if match else None


def parse_cell(raw: str) -> CellValue:
    """Deterministic typed reading of a cell. Total: falls back to kind="text".

    Dates are matched first ("august 12", "august 12 , 2008", "2008 - 8 - 12";
    month names case-insensitive, 3-letter prefixes accepted), then the first
    numeral of the comma-stripped text is extracted ("12 (3 ot)" -> 12,
    "1,204" -> 1204), else the cell is plain text.
    """
    text = raw.strip().lower()
    date = _parse_date(text)
    if date is not None:
        return CellValue(raw=raw, kind="date", date=date)
    number = _parse_number(text)
    if number is not None:
        return CellValue(raw=raw, kind="number", number=number)
    return CellValue(raw=raw, kind="text")


def normalize_column(name: str) -> str:
    return " ".join(name.strip().lower().split())


@dataclass(frozen=True)
class Table:
    """A rectangular table; the execution context for logical forms."""

    id: str
    caption: str
    columns: tuple[str, ...]
    rows: tuple[tuple[CellValue, ...], ...]

    def __post_init__(self):
        if len(self.columns) < 1:
            raise CorpusError(f"table {self.id!r} has zero columns")
        if len(set(self.columns)) != len(self.columns):
            raise CorpusError(f"table {self.id!r} has duplicate columns after normalization")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise CorpusError(f"table {self.id!r} is not rectangular")

    @classmethod
    def from_raw(cls, table_id: str, caption: str, columns, rows) -> "Table":
        cols = tuple(normalize_column(c) for c in columns)
        parsed = tuple(tuple(parse_cell(str(c)) for c in row) for row in rows)
        return cls(id=table_id, caption=caption, columns=cols, rows=parsed)

    def column_index(self, name: str) -> int | None:
        try:
            return self.columns.index(normalize_column(name))
        except ValueError:
            return None

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def raw_rows(self) -> list[list[str]]:
        return [[cell.raw for cell in row] for row in self.rows]

    def dedup_key(self) -> tuple:
        return (self.caption, self.columns, tuple(tuple(c.raw for c in row) for row in self.rows))


@dataclass(frozen=True)
class SupervisedInstance:
    logic_type: str
    table: Table
    lf: str
    text: str

    def __post_init__(self):
        if self.logic_type not in LOGIC_TYPES:
            raise CorpusError(f"unknown logic type {self.logic_type!r}")


@dataclass
class LoadReport:
    files_read: int = 0
    padded_rows: int = 0
    truncated_rows: int = 0
    dropped_missing_field: int = 0
    dropped_unparseable_lf: int = 0
    dropped_unknown_type: int = 0
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        logger.warning(message)


@dataclass
class Corpus:
    """Tables plus supervised instances. Tables without instances are allowed."""

    tables: dict[str, Table] = field(default_factory=dict)
    instances: list[SupervisedInstance] = field(default_factory=list)
    report: LoadReport = field(default_factory=LoadReport)

    def add_table(self, table: Table) -> None:
        if table.id in self.tables:
            raise CorpusError(f"duplicate table id {table.id!r}")
        self.tables[table.id] = table


def _pad_rows(rows: list[list[str]], width: int, table_id: str, report: LoadReport) -> list[list[str]]:
    fixed = []
    for i, row in enumerate(rows):
        row = [str(c) for c in row]
        if len(row) < width:
            report.padded_rows += 1
            report.warn(f"table {table_id!r}: row {i} padded from {len(row)} to {width} cells")
            row = row + [""] * (width - len(row))
        elif len(row) > width:
            report.truncated_rows += 1
            report.warn(f"table {table_id!r}: row {i} truncated from {len(row)} to {width} cells")
            row = row[:width]
        fixed.append(row)
    return fixed


def load_tables(path, format: str = "csv-dir") -> Corpus:
    """Ingest tables from a directory of CSV files or a JSON file.

    CSV files need a header row; the file stem becomes the table id. The JSON
    form accepts either the exported corpus schema or a bare array of
    {id?, caption, columns, rows} objects. Short rows are padded with empty
    cells (warning recorded), long rows truncated.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such path: {path}")
    corpus = Corpus()
    if format == "csv-dir":
        files = [path] if path.is_file() else sorted(path.glob("*.csv"))
        if not files:
            raise CorpusError(f"no CSV files under {path}")
        for file in files:
            _load_csv_table(file, corpus)
    elif format == "json":
        data = _read_json(path)
        if isinstance(data, dict):
            data = data.get("tables", [])
        for i, obj in enumerate(data):
            table_id = str(obj.get("id", f"t{i:04d}"))
            columns = obj.get("columns")
            rows = obj.get("rows", [])
            if not columns:
                raise CorpusError(f"table object {i} in {path} has zero columns")
            rows = _pad_rows(list(rows), len(columns), table_id, corpus.report)
            corpus.add_table(Table.from_raw(table_id, str(obj.get("caption", "")), columns, rows))
            corpus.report.files_read += 1
    else:
        raise CorpusError(f"unknown table format {format!r}")
    return corpus


def _read_json(path: Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusError(f"unreadable file {path}: {exc}") from exc


def _load_csv_table(file: Path, corpus: Corpus) -> None:
    try:
        with open(file, encoding="utf-8", newline="") as fh:
            reader = list(csv.reader(fh))
    except OSError as exc:
        raise CorpusError(f"unreadable file {file}: {exc}") from exc
    if not reader or not any(cell.strip() for cell in reader[0]):
        raise CorpusError(f"{file}: missing header row (zero columns)")
    header, *rows = reader
    table_id = file.stem
    rows = _pad_rows(rows, len(header), table_id, corpus.report)
    corpus.add_table(Table.from_raw(table_id, table_id, header, rows))
    corpus.report.files_read += 1


# Field names of the public Logic2text release; override via `field_map`.
DEFAULT_FIELD_MAP = {
    "caption": "topic",
    "columns": "table_header",
    "rows": "table_cont",
    "logic_type": "action",
    "lf": "logic_str",
    "text": "sent",
}


def load_dataset(path, field_map: dict[str, str] | None = None) -> Corpus:
    """Ingest a dataset JSON array into a corpus, deduplicating shared tables.

    Instances whose mapped fields are missing, whose logic type is unknown, or
    whose logical form does not parse are dropped with a counted warning.
    """
    from .dsl.parser import LfParseError, parse_lf  # local import: dsl depends on tables

    fmap = dict(DEFAULT_FIELD_MAP)
    if field_map:
        fmap.update(field_map)
    data = _read_json(Path(path))
    if not isinstance(data, list):
        raise CorpusError(f"{path}: expected a JSON array of instance objects")

    corpus = Corpus()
    by_key: dict[tuple, Table] = {}
    for i, obj in enumerate(data):
        try:
            caption = str(obj[fmap["caption"]])
            columns = obj[fmap["columns"]]
            rows = obj[fmap["rows"]]
            logic_type = str(obj[fmap["logic_type"]])
            lf = str(obj[fmap["lf"]])
            text = str(obj[fmap["text"]])
        except (KeyError, TypeError):
            corpus.report.dropped_missing_field += 1
            corpus.report.warn(f"instance {i}: missing mapped field, dropped")
            continue
        if logic_type not in LOGIC_TYPES:
            corpus.report.dropped_unknown_type += 1
            corpus.report.warn(f"instance {i}: unknown logic type {logic_type!r}, dropped")
            continue
        try:
            parse_lf(lf)
        except LfParseError as exc:
            corpus.report.dropped_unparseable_lf += 1
            corpus.report.warn(f"instance {i}: unparseable logical form ({exc}), dropped")
            continue
        rows = _pad_rows(list(rows), len(columns), f"instance {i}", corpus.report)
        candidate = Table.from_raw(f"t{len(by_key):04d}", caption, columns, rows)
        table = by_key.get(candidate.dedup_key())
        if table is None:
            table = candidate
            by_key[table.dedup_key()] = table
            corpus.add_table(table)
        corpus.instances.append(SupervisedInstance(logic_type, table, lf, text))
    logger.info(
        "loaded %d instances over %d distinct tables from %s",
        len(corpus.instances), len(corpus.tables), path,
    )
    return corpus


def export_corpus(corpus: Corpus, path) -> None:
    """Write the documented stable corpus schema (tables + instances)."""
    doc = {
        "schema": CORPUS_SCHEMA,
        "tables": [
            {"id": t.id, "caption": t.caption, "columns": list(t.columns), "rows": t.raw_rows()}
            for t in corpus.tables.values()
        ],
        "instances": [
            {"logic_type": inst.logic_type, "table_id": inst.table.id, "lf": inst.lf, "text": inst.text}
            for inst in corpus.instances
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=1), encoding="utf-8")


def load_corpus(path) -> Corpus:
    """Load a corpus previously written by `export_corpus`."""
    doc = _read_json(Path(path))
    corpus = Corpus()
    for obj in doc.get("tables", []):
        corpus.add_table(Table.from_raw(str(obj["id"]), obj["caption"], obj["columns"], obj["rows"]))
    for obj in doc.get("instances", []):
        table = corpus.tables[obj["table_id"]]
        corpus.instances.append(SupervisedInstance(obj["logic_type"], table, obj["lf"], obj["text"]))
    return corpus


def stratified_sample(corpus: Corpus, k: int, seed: int) -> Corpus:
    """Sample k instances keeping per-logic-type counts proportional (±1).

    All tables are kept so downstream augmentation can still see every table.
    Quotas use the largest-remainder method; sampling within a type is
    seed-deterministic.
    """
    import random

    if k < 0 or k > len(corpus.instances):
        raise CorpusError(f"cannot sample {k} of {len(corpus.instances)} instances")
    groups: dict[str, list[SupervisedInstance]] = {}
    for inst in corpus.instances:
        groups.setdefault(inst.logic_type, []).append(inst)
    total = len(corpus.instances)
    exact = {t: k * len(g) / total for t, g in groups.items()}
    quotas = {t: int(exact[t]) for t in groups}
    remainder = k - sum(quotas.values())
    for t in sorted(groups, key=lambda t: (-(exact[t] - quotas[t]), t))[:remainder]:
        quotas[t] += 1
    rng = random.Random(seed)
    sampled: list[SupervisedInstance] = []
    for t in sorted(groups):
        take = min(quotas[t], len(groups[t]))
        sampled.extend(rng.sample(groups[t], take))
    return Corpus(tables=dict(corpus.tables), instances=sampled)
