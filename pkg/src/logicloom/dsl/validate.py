"""Type checking of parsed logical forms, plus column existence against a table.

"Structurally valid" means the bottom-up type check passes; "table-valid"
additionally requires every column literal to name an existing column.
Violations are data, not exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..tables import Table, normalize_column, parse_cell
from .ast import Literal, LfNode
from .parser import print_lf
from .registry import COL, NUM, OBJ, REGISTRY, VAL


@dataclass(frozen=True)
class Violation:
    kind: str  # "type" | "column"
    node: str  # canonical print of the offending subtree
    message: str


@dataclass
class ValidityReport:
    structural: list[Violation] = field(default_factory=list)
    column: list[Violation] = field(default_factory=list)
    root_type: str | None = None

    @property
    def structurally_valid(self) -> bool:
        return not self.structural

    @property
    def table_valid(self) -> bool:
        return not self.structural and not self.column

    def to_json(self) -> dict:
        return {
            "structurally_valid": self.structurally_valid,
            "table_valid": self.table_valid,
            "root_type": self.root_type,
            "violations": [
                {"kind": v.kind, "node": v.node, "message": v.message}
                for v in self.structural + self.column
            ],
        }


def _literal_type(lit: Literal) -> str:
    return NUM if parse_cell(lit.tokens).kind == "number" else OBJ


def _accepts(expected: str, node: LfNode, actual: str) -> bool:
    if expected == COL or expected == VAL:
        return isinstance(node, Literal)
    if expected == NUM:
        return actual == NUM
    if expected == OBJ:
        return actual in (OBJ, NUM)
    return actual == expected  # view, bool


def validate_lf(ast: LfNode, table: Table | None = None) -> ValidityReport:
    """Type-check an AST bottom-up; check column literals when a table is given."""
    report = ValidityReport()
    report.root_type = _check(ast, report, table)
    return report


def _check(node: LfNode, report: ValidityReport, table: Table | None) -> str:
    if isinstance(node, Literal):
        return _literal_type(node)
    sig = REGISTRY[node.function]
    for expected, arg in zip(sig.arg_types, node.args):
        actual = _check(arg, report, table)
        if not _accepts(expected, arg, actual):
            report.structural.append(Violation(
                "type", print_lf(arg),
                f"{node.function}: {expected} expected, got {actual}",
            ))
        if expected == COL and isinstance(arg, Literal) and table is not None:
            if normalize_column(arg.tokens) not in table.columns:
                report.column.append(Violation(
                    "column", arg.tokens,
                    f"column {arg.tokens!r} not in table {table.id!r}",
                ))
    return sig.return_type
