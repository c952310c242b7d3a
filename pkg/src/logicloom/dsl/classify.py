"""Rule-based logic-type classification of logical forms.

Markers are checked in a fixed precedence so every valid AST gets exactly one
of the seven types. The mapping from functions to types is effectively
deterministic, which is why a rule table suffices here.
"""

from __future__ import annotations

from .ast import Apply, LfNode, contains_function, iter_applies
from .registry import ALL_ROWS


def classify_lf_topic(ast: LfNode) -> str:
    """Deterministic topic of a valid AST; total."""
    functions = [a.function for a in iter_applies(ast)]
    if any(f.startswith("most_") or (f.startswith("all_") and f != ALL_ROWS) for f in functions):
        return "majority"
    if any(f.startswith("nth_") for f in functions):
        return "ordinal"
    if "only" in functions:
        return "unique"
    if "sum" in functions or "avg" in functions:
        return "aggregation"
    if any(f in ("argmax", "argmin", "max", "min") for f in functions):
        return "superlative"
    if _is_comparative(ast):
        return "comparative"
    return "count"


def _is_comparative(ast: LfNode) -> bool:
    # A greater/less/diff node comparing two hop-derived values, at the root
    # or wrapped (e.g. eq { diff { hop... ; hop... } ; n }).
    for node in iter_applies(ast):
        if node.function in ("greater", "less", "diff") and len(node.args) == 2:
            if all(isinstance(a, Apply) and contains_function(a, "hop") for a in node.args):
                return True
    return False
