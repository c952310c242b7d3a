"""Grammar-directed sampling of logical forms that are true on a given table.

Shapes are built from actual table cells and verified by execution, so the
postcondition (classifies as the requested topic, executes to true) holds by
construction; rejection sampling retries shape and argument choices up to a
bound. Deterministic for a fixed (table, topic, seed).
"""

from __future__ import annotations

import random

from ..tables import Table
from .ast import Apply, Literal, LfNode
from .classify import classify_lf_topic
from .executor import LfExecError, execute_lf
from .parser import parse_lf, print_lf
from .registry import ALL_ROWS

MAX_TRIES = 200

_FILTERS = ("filter_eq", "filter_greater", "filter_less", "filter_greater_eq", "filter_less_eq")


class SamplingExhausted(RuntimeError):
    """No candidate satisfied the topic/truth constraints within the retry bound."""


def _fmt_num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(round(value, 4))


def _safe_literal(raw: str) -> str | None:
    """A cell value usable as a literal token run, or None."""
    text = " ".join(raw.split())
    if not text or any(ch in text for ch in "{};"):
        return None
    if text == ALL_ROWS:
        return None
    return text


def sample_lf(table: Table, topic: str, seed: int, depth_budget: int = 4) -> Apply:
    """Sample an AST with classify_lf_topic(ast) == topic and a true execution.

    depth_budget counts nested applies, zero-argument leaves excluded;
    comparative shapes need a budget of at least 3.
    """
    if table.n_rows < 1:
        raise ValueError("table must have at least one row")
    if depth_budget < 2:
        raise ValueError("depth_budget must be >= 2")
    rng = random.Random(f"{seed}:{table.id}:{topic}")
    builders = {
        "count": _sample_count,
        "unique": _sample_unique,
        "superlative": _sample_superlative,
        "ordinal": _sample_ordinal,
        "aggregation": _sample_aggregation,
        "majority": _sample_majority,
        "comparative": _sample_comparative,
    }
    try:
        build = builders[topic]
    except KeyError:
        raise ValueError(f"unknown topic {topic!r}") from None
    for _ in range(MAX_TRIES):
        candidate = build(table, rng, depth_budget)
        if candidate is None:
            continue
        if classify_lf_topic(candidate) != topic:
            continue
        try:
            result = execute_lf(candidate, table)
        except LfExecError:
            continue
        if result.is_true() and parse_lf(print_lf(candidate)) == candidate:
            return candidate
    raise SamplingExhausted(f"no {topic} logical form found for table {table.id!r}")


# ---- per-topic shape builders ----------------------------------------------


def _col_literal(table: Table, index: int) -> Literal:
    return Literal(table.columns[index])


def _cell_literal(table: Table, rng: random.Random, col: int) -> Literal | None:
    values = [v for v in (_safe_literal(row[col].raw) for row in table.rows) if v]
    return Literal(rng.choice(values)) if values else None


def _num(node: LfNode, table: Table) -> float | None:
    try:
        value = execute_lf(node, table)
    except LfExecError:
        return None
    if value.kind == "num":
        return value.value
    if value.kind == "obj" and value.value.kind == "number":
        return value.value.number
    return None


def _sortable_columns(table: Table, numeric_only: bool = False) -> list[int]:
    kinds = ("number",) if numeric_only else ("number", "date")
    return [
        c for c in range(len(table.columns))
        if any(row[c].kind in kinds for row in table.rows)
    ]


def _sample_count(table: Table, rng: random.Random, depth: int) -> Apply | None:
    if depth >= 3 and rng.random() < 0.7:
        col = rng.randrange(len(table.columns))
        value = _cell_literal(table, rng, col)
        if value is None:
            return None
        view = Apply(rng.choice(_FILTERS), (Apply(ALL_ROWS), _col_literal(table, col), value))
    else:
        view = Apply(ALL_ROWS)
    count = Apply("count", (view,))
    n = _num(count, table)
    if n is None:
        return None
    return Apply("eq", (count, Literal(_fmt_num(n))))


def _unique_filter(table: Table, rng: random.Random) -> Apply | None:
    """A filter_eq view holding exactly one row, or None. Plain-text key
    columns are tried first so row handles read like names, not numbers."""
    cols = list(range(len(table.columns)))
    rng.shuffle(cols)
    cols.sort(key=lambda c: sum(1 for row in table.rows if row[c].kind != "text"))
    for col in cols:
        values = [v for v in (_safe_literal(row[col].raw) for row in table.rows) if v]
        rng.shuffle(values)
        for value in values:
            view = Apply("filter_eq", (Apply(ALL_ROWS), _col_literal(table, col), Literal(value)))
            n = _num(Apply("count", (view,)), table)
            if n == 1:
                return view
    return None


def _sample_unique(table: Table, rng: random.Random, depth: int) -> Apply | None:
    view = _unique_filter(table, rng)
    return Apply("only", (view,)) if view is not None else None


def _sample_superlative(table: Table, rng: random.Random, depth: int) -> Apply | None:
    fn = rng.choice(("max", "min")) if depth < 3 or rng.random() < 0.5 else None
    if fn is not None:
        cols = _sortable_columns(table, numeric_only=True)
        if not cols:
            return None
        col = rng.choice(cols)
        agg = Apply(fn, (Apply(ALL_ROWS), _col_literal(table, col)))
        value = _num(agg, table)
        if value is None:
            return None
        return Apply("eq", (agg, Literal(_fmt_num(value))))
    cols = _sortable_columns(table)
    if not cols:
        return None
    col = rng.choice(cols)
    pick = Apply(rng.choice(("argmax", "argmin")), (Apply(ALL_ROWS), _col_literal(table, col)))
    return _hop_equals(table, rng, pick, avoid_col=col)


def _hop_equals(table: Table, rng: random.Random, view: Apply,
                avoid_col: int | None = None) -> Apply | None:
    """eq { hop { view ; keycol } ; value-of-that-row }."""
    try:
        rows = execute_lf(view, table)
    except LfExecError:
        return None
    if rows.kind != "view" or len(rows.value) != 1:
        return None
    row = rows.value[0]
    cols = list(range(len(table.columns)))
    rng.shuffle(cols)
    cols.sort(key=lambda c: c == avoid_col)
    for key_col in cols:
        value = _safe_literal(table.rows[row][key_col].raw)
        if value:
            hop = Apply("hop", (view, _col_literal(table, key_col)))
            return Apply("eq", (hop, Literal(value)))
    return None


def _sample_ordinal(table: Table, rng: random.Random, depth: int) -> Apply | None:
    numeric = _sortable_columns(table, numeric_only=True)
    if not numeric:
        return None
    col = rng.choice(numeric)
    n_sortable = sum(1 for row in table.rows if row[col].kind == "number")
    n = rng.randint(1, n_sortable)
    rank = Literal(str(n))
    if depth >= 3 and rng.random() < 0.5:
        pick = Apply(rng.choice(("nth_argmax", "nth_argmin")),
                     (Apply(ALL_ROWS), _col_literal(table, col), rank))
        return _hop_equals(table, rng, pick, avoid_col=col)
    agg = Apply(rng.choice(("nth_max", "nth_min")),
                (Apply(ALL_ROWS), _col_literal(table, col), rank))
    value = _num(agg, table)
    if value is None:
        return None
    return Apply("eq", (agg, Literal(_fmt_num(value))))


def _sample_aggregation(table: Table, rng: random.Random, depth: int) -> Apply | None:
    cols = _sortable_columns(table, numeric_only=True)
    if not cols:
        return None
    col = rng.choice(cols)
    agg = Apply(rng.choice(("avg", "sum")), (Apply(ALL_ROWS), _col_literal(table, col)))
    value = _num(agg, table)
    if value is None:
        return None
    if float(value).is_integer():
        return Apply("eq", (agg, Literal(_fmt_num(value))))
    return Apply("round_eq", (agg, Literal(_fmt_num(value))))


def _sample_majority(table: Table, rng: random.Random, depth: int) -> Apply | None:
    cols = list(range(len(table.columns)))
    rng.shuffle(cols)
    for col in cols:
        values = [v for v in (_safe_literal(row[col].raw) for row in table.rows) if v]
        rng.shuffle(values)
        for value in values:
            view = Apply("filter_eq", (Apply(ALL_ROWS), _col_literal(table, col), Literal(value)))
            hits = _num(Apply("count", (view,)), table)
            if hits is None:
                continue
            if hits == table.n_rows:
                fn = rng.choice(("all_eq", "most_eq"))
                return Apply(fn, (Apply(ALL_ROWS), _col_literal(table, col), Literal(value)))
            if hits * 2 > table.n_rows:
                return Apply("most_eq", (Apply(ALL_ROWS), _col_literal(table, col), Literal(value)))
    return None


def _sample_comparative(table: Table, rng: random.Random, depth: int) -> Apply | None:
    if depth < 3:
        return None
    numeric = _sortable_columns(table, numeric_only=True)
    if not numeric:
        return None
    value_col = rng.choice(numeric)
    first = _unique_filter(table, rng)
    second = _unique_filter(table, rng)
    if first is None or second is None or first == second:
        return None
    hop_a = Apply("hop", (first, _col_literal(table, value_col)))
    hop_b = Apply("hop", (second, _col_literal(table, value_col)))
    a, b = _num(hop_a, table), _num(hop_b, table)
    if a is None or b is None or a == b:
        return None
    return Apply("greater" if a > b else "less", (hop_a, hop_b))
