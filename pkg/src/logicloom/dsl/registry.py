"""The closed function registry of the logical-form language.

Fixed at import time; 40 functions covering filtering, superlatives,
ordinals, aggregation, majority tests, and scalar comparison. Argument and
return types come from the small set {view, col, val, num, obj, bool}.
"""

from __future__ import annotations

from dataclasses import dataclass

VIEW = "view"
COL = "col"
VAL = "val"
NUM = "num"
OBJ = "obj"
BOOL = "bool"

ALL_ROWS = "all_rows"

COMPARE_SUFFIXES = ("eq", "not_eq", "greater", "less", "greater_eq", "less_eq")


@dataclass(frozen=True)
class FunctionSig:
    name: str
    arg_types: tuple[str, ...]
    return_type: str
    topic_tags: frozenset[str] = frozenset()

    @property
    def arity(self) -> int:
        return len(self.arg_types)


def _build_registry() -> dict[str, FunctionSig]:
    sigs: list[FunctionSig] = [FunctionSig(ALL_ROWS, (), VIEW)]
    for suffix in COMPARE_SUFFIXES:
        sigs.append(FunctionSig(f"filter_{suffix}", (VIEW, COL, VAL), VIEW))
        sigs.append(FunctionSig(f"all_{suffix}", (VIEW, COL, VAL), BOOL, frozenset({"majority"})))
        sigs.append(FunctionSig(f"most_{suffix}", (VIEW, COL, VAL), BOOL, frozenset({"majority"})))
    sigs += [
        FunctionSig("argmax", (VIEW, COL), VIEW, frozenset({"superlative"})),
        FunctionSig("argmin", (VIEW, COL), VIEW, frozenset({"superlative"})),
        FunctionSig("nth_argmax", (VIEW, COL, NUM), VIEW, frozenset({"ordinal"})),
        FunctionSig("nth_argmin", (VIEW, COL, NUM), VIEW, frozenset({"ordinal"})),
        FunctionSig("count", (VIEW,), NUM, frozenset({"count"})),
        FunctionSig("hop", (VIEW, COL), OBJ),
        FunctionSig("max", (VIEW, COL), NUM, frozenset({"superlative"})),
        FunctionSig("min", (VIEW, COL), NUM, frozenset({"superlative"})),
        FunctionSig("sum", (VIEW, COL), NUM, frozenset({"aggregation"})),
        FunctionSig("avg", (VIEW, COL), NUM, frozenset({"aggregation"})),
        FunctionSig("nth_max", (VIEW, COL, NUM), NUM, frozenset({"ordinal"})),
        FunctionSig("nth_min", (VIEW, COL, NUM), NUM, frozenset({"ordinal"})),
        FunctionSig("eq", (OBJ, OBJ), BOOL),
        FunctionSig("not_eq", (OBJ, OBJ), BOOL),
        FunctionSig("round_eq", (OBJ, OBJ), BOOL),
        FunctionSig("greater", (OBJ, OBJ), BOOL, frozenset({"comparative"})),
        FunctionSig("less", (OBJ, OBJ), BOOL, frozenset({"comparative"})),
        FunctionSig("diff", (OBJ, OBJ), NUM, frozenset({"comparative"})),
        FunctionSig("and", (BOOL, BOOL), BOOL),
        FunctionSig("only", (VIEW,), BOOL, frozenset({"unique"})),
    ]
    return {sig.name: sig for sig in sigs}


REGISTRY: dict[str, FunctionSig] = _build_registry()
