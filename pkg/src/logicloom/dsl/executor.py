"""Bottom-up evaluation of logical forms against a table.

Value matching between a cell and a literal tries numbers first (both sides
parse as numbers), then dates, then case-insensitive containment in either
direction, so partial values like "august" match "august 12". Empty cells
never match anything. Ties in argmax/argmin/nth_* are stable (first row in
table order wins) and nth over a sorted multiset includes duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..tables import CellValue, Table, parse_cell
from .ast import Apply, Literal, LfNode
from .parser import print_lf

# Error kinds raised during execution.
COLUMN_NOT_FOUND = "column_not_found"
EMPTY_VIEW = "empty_view"
EXACTLY_ONE_ROW = "exactly_one_row"
NTH_OUT_OF_RANGE = "nth_out_of_range"
NON_NUMERIC = "non_numeric"
TYPE_ERROR = "type_error"

ROUND_EQ_REL_TOL = 0.05


class LfExecError(Exception):
    """Execution failure; identifies the failing subtree."""

    def __init__(self, kind: str, node: LfNode, message: str):
        self.kind = kind
        self.node = node
        super().__init__(f"{kind}: {message} in `{print_lf(node)}`")


@dataclass(frozen=True)
class ExecValue:
    """Result of evaluating a (sub)tree: bool, num, obj (a cell), or view."""

    kind: str  # "bool" | "num" | "obj" | "view"
    value: Any  # bool | float | CellValue | tuple[int, ...]

    def is_true(self) -> bool:
        return self.kind == "bool" and self.value is True

    def to_json(self) -> dict:
        if self.kind == "num":
            num = self.value
            return {"num": int(num) if float(num).is_integer() else num}
        if self.kind == "obj":
            return {"obj": self.value.raw}
        if self.kind == "view":
            return {"view": list(self.value)}
        return {"bool": self.value}


def match_eq(a: CellValue, b: CellValue) -> bool:
    if a.kind == "number" and b.kind == "number":
        return a.number == b.number
    if a.kind == "date" and b.kind == "date":
        return a.date == b.date
    left, right = a.norm, b.norm
    if not left or not right:
        return False
    return left in right or right in left


def compare(a: CellValue, b: CellValue) -> int | None:
    """-1/0/1 ordering for number or date pairs, None when incomparable."""
    if a.kind == "number" and b.kind == "number":
        return (a.number > b.number) - (a.number < b.number)
    if a.kind == "date" and b.kind == "date":
        ka, kb = a.date_key(), b.date_key()
        return (ka > kb) - (ka < kb)
    return None


_COMPARE_TESTS = {
    "eq": lambda cell, lit: match_eq(cell, lit),
    "not_eq": lambda cell, lit: not match_eq(cell, lit),
    "greater": lambda cell, lit: (c := compare(cell, lit)) is not None and c > 0,
    "less": lambda cell, lit: (c := compare(cell, lit)) is not None and c < 0,
    "greater_eq": lambda cell, lit: (c := compare(cell, lit)) is not None and c >= 0,
    "less_eq": lambda cell, lit: (c := compare(cell, lit)) is not None and c <= 0,
}


def execute_lf(node: LfNode, table: Table) -> ExecValue:
    """Evaluate a structurally valid AST on a table; deterministic."""
    return _Evaluator(table).eval(node)


class _Evaluator:
    def __init__(self, table: Table):
        self.table = table

    def eval(self, node: LfNode) -> ExecValue:
        if isinstance(node, Literal):
            return ExecValue("obj", parse_cell(node.tokens))
        fn = node.function
        if fn == "all_rows":
            return ExecValue("view", tuple(range(self.table.n_rows)))
        if fn.startswith("filter_"):
            return self._filter(node)
        if fn.startswith("all_") or fn.startswith("most_"):
            return self._quantify(node)
        if fn in ("argmax", "argmin", "nth_argmax", "nth_argmin"):
            return self._arg_select(node)
        if fn in ("max", "min", "sum", "avg", "nth_max", "nth_min"):
            return self._aggregate(node)
        if fn == "count":
            view = self._view(node.args[0], node)
            return ExecValue("num", float(len(view)))
        if fn == "hop":
            return self._hop(node)
        if fn == "only":
            view = self._view(node.args[0], node)
            return ExecValue("bool", len(view) == 1)
        if fn == "and":
            a = self._bool(node.args[0], node)
            b = self._bool(node.args[1], node)
            return ExecValue("bool", a and b)
        if fn in ("eq", "not_eq", "greater", "less", "round_eq", "diff"):
            return self._scalar_op(node)
        raise LfExecError(TYPE_ERROR, node, f"no semantics for {fn!r}")

    # ---- typed argument helpers -------------------------------------------

    def _view(self, arg: LfNode, parent: Apply) -> tuple[int, ...]:
        value = self.eval(arg)
        if value.kind != "view":
            raise LfExecError(TYPE_ERROR, parent, f"expected a view, got {value.kind}")
        return value.value

    def _bool(self, arg: LfNode, parent: Apply) -> bool:
        value = self.eval(arg)
        if value.kind != "bool":
            raise LfExecError(TYPE_ERROR, parent, f"expected a bool, got {value.kind}")
        return value.value

    def _scalar(self, arg: LfNode, parent: Apply) -> CellValue:
        value = self.eval(arg)
        if value.kind == "obj":
            return value.value
        if value.kind == "num":
            num = value.value
            raw = str(int(num)) if float(num).is_integer() else str(num)
            return CellValue(raw=raw, kind="number", number=float(num))
        raise LfExecError(TYPE_ERROR, parent, f"expected a scalar, got {value.kind}")

    def _column(self, arg: LfNode, parent: Apply) -> int:
        if not isinstance(arg, Literal):
            raise LfExecError(TYPE_ERROR, parent, "column argument must be a literal")
        index = self.table.column_index(arg.tokens)
        if index is None:
            raise LfExecError(COLUMN_NOT_FOUND, parent, f"no column {arg.tokens!r}")
        return index

    def _literal_cell(self, arg: LfNode, parent: Apply) -> CellValue:
        if not isinstance(arg, Literal):
            raise LfExecError(TYPE_ERROR, parent, "value argument must be a literal")
        return parse_cell(arg.tokens)

    def _nth(self, arg: LfNode, parent: Apply) -> int:
        cell = self.eval(arg)
        num = cell.value.number if cell.kind == "obj" else (cell.value if cell.kind == "num" else None)
        if num is None or float(num) != int(num) or int(num) < 1:
            raise LfExecError(NTH_OUT_OF_RANGE, parent, "ordinal must be a positive integer")
        return int(num)

    # ---- function groups ---------------------------------------------------

    def _filter(self, node: Apply) -> ExecValue:
        view = self._view(node.args[0], node)
        col = self._column(node.args[1], node)
        lit = self._literal_cell(node.args[2], node)
        test = _COMPARE_TESTS[node.function.removeprefix("filter_")]
        kept = tuple(i for i in view if test(self.table.rows[i][col], lit))
        return ExecValue("view", kept)

    def _quantify(self, node: Apply) -> ExecValue:
        view = self._view(node.args[0], node)
        col = self._column(node.args[1], node)
        lit = self._literal_cell(node.args[2], node)
        quant, _, suffix = node.function.partition("_")
        test = _COMPARE_TESTS[suffix]
        hits = sum(1 for i in view if test(self.table.rows[i][col], lit))
        if quant == "all":
            return ExecValue("bool", hits == len(view))
        return ExecValue("bool", hits * 2 > len(view))

    def _sort_keys(self, node: Apply, view: tuple[int, ...], col: int, dates_ok: bool):
        """(row, key) pairs for sortable cells; numbers preferred, dates as fallback."""
        if not view:
            raise LfExecError(EMPTY_VIEW, node, "no rows to rank")
        numeric = [(i, self.table.rows[i][col].number) for i in view
                   if self.table.rows[i][col].kind == "number"]
        if numeric:
            return numeric
        if dates_ok:
            dated = [(i, self.table.rows[i][col].date_key()) for i in view
                     if self.table.rows[i][col].kind == "date"]
            if dated:
                return dated
        raise LfExecError(NON_NUMERIC, node, "no sortable cells in column")

    def _arg_select(self, node: Apply) -> ExecValue:
        view = self._view(node.args[0], node)
        col = self._column(node.args[1], node)
        keyed = self._sort_keys(node, view, col, dates_ok=True)
        descending = "argmax" in node.function
        # reverse=True keeps insertion order among equal keys, so ties go to
        # the first row in table order.
        ranked = sorted(keyed, key=lambda pair: pair[1], reverse=descending)
        if node.function.startswith("nth_"):
            n = self._nth(node.args[2], node)
            if n > len(ranked):
                raise LfExecError(NTH_OUT_OF_RANGE, node, f"rank {n} of {len(ranked)}")
            return ExecValue("view", (ranked[n - 1][0],))
        return ExecValue("view", (ranked[0][0],))

    def _aggregate(self, node: Apply) -> ExecValue:
        view = self._view(node.args[0], node)
        col = self._column(node.args[1], node)
        keyed = self._sort_keys(node, view, col, dates_ok=False)
        values = [v for _, v in keyed]
        fn = node.function
        if fn == "max":
            return ExecValue("num", max(values))
        if fn == "min":
            return ExecValue("num", min(values))
        if fn == "sum":
            return ExecValue("num", float(sum(values)))
        if fn == "avg":
            return ExecValue("num", float(sum(values)) / len(values))
        n = self._nth(node.args[2], node)
        if n > len(values):
            raise LfExecError(NTH_OUT_OF_RANGE, node, f"rank {n} of {len(values)}")
        ordered = sorted(values, reverse=(fn == "nth_max"))
        return ExecValue("num", ordered[n - 1])

    def _hop(self, node: Apply) -> ExecValue:
        view = self._view(node.args[0], node)
        col = self._column(node.args[1], node)
        if not view:
            raise LfExecError(EMPTY_VIEW, node, "hop over an empty view")
        if len(view) > 1:
            raise LfExecError(EXACTLY_ONE_ROW, node, f"hop over {len(view)} rows")
        return ExecValue("obj", self.table.rows[view[0]][col])

    def _scalar_op(self, node: Apply) -> ExecValue:
        a = self._scalar(node.args[0], node)
        b = self._scalar(node.args[1], node)
        fn = node.function
        if fn == "eq":
            return ExecValue("bool", match_eq(a, b))
        if fn == "not_eq":
            return ExecValue("bool", not match_eq(a, b))
        if fn == "round_eq":
            if a.kind == "number" and b.kind == "number":
                tol = ROUND_EQ_REL_TOL * max(1.0, abs(b.number))
                return ExecValue("bool", abs(a.number - b.number) <= tol)
            return ExecValue("bool", match_eq(a, b))
        if fn == "diff":
            if a.kind != "number" or b.kind != "number":
                raise LfExecError(NON_NUMERIC, node, "diff needs numeric operands")
            return ExecValue("num", a.number - b.number)
        order = compare(a, b)
        if fn == "greater":
            return ExecValue("bool", order is not None and order > 0)
        return ExecValue("bool", order is not None and order < 0)
