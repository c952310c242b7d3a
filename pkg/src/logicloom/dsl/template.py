"""Fixed per-topic English templates turning a logical form into a sentence.

Total: shapes the templates do not recognize fall back to a generic sentence,
so every structurally valid AST realizes to non-empty text. Template wording
is aligned with the keyword text classifier (augment module) so realized
sentences classify back to their topic.
"""

from __future__ import annotations

from ..tables import Table
from .ast import Apply, Literal, LfNode
from .classify import classify_lf_topic

_FILTER_RELATION = {
    "filter_eq": "is",
    "filter_not_eq": "is not",
    "filter_greater": "is greater than",
    "filter_less": "is less than",
    "filter_greater_eq": "is at least",
    "filter_less_eq": "is at most",
}
_QUANT_RELATION = {
    "eq": "equal to",
    "not_eq": "different from",
    "greater": "greater than",
    "less": "less than",
    "greater_eq": "at least",
    "less_eq": "at most",
}
_ORDINAL_SUFFIX = {1: "st", 2: "nd", 3: "rd"}


def _ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        return f"{n}th"
    return f"{n}{_ORDINAL_SUFFIX.get(n % 10, 'th')}"


def _lit(node: LfNode) -> str | None:
    return node.tokens if isinstance(node, Literal) else None


def _fn(node: LfNode, *names: str) -> bool:
    return isinstance(node, Apply) and node.function in names


def _view_phrase(node: LfNode) -> str:
    """Describe a view-producing subtree as a noun phrase over "rows"."""
    if _fn(node, "all_rows"):
        return "rows"
    if isinstance(node, Apply) and node.function in _FILTER_RELATION:
        inner = _view_phrase(node.args[0])
        col, val = _lit(node.args[1]), _lit(node.args[2])
        if col and val:
            return f"{inner} whose {col} {_FILTER_RELATION[node.function]} {val}"
    return "matching rows"


def realize_template(ast: LfNode, table: Table) -> str:
    """Fill the topic's template with caption, columns, and literal arguments."""
    topic = classify_lf_topic(ast)
    caption = table.caption.strip() or "the table"
    realize = _REALIZERS[topic]
    sentence = realize(ast, caption)
    if sentence is None:
        head = ast.function if isinstance(ast, Apply) else "the condition"
        sentence = f"in {caption} , the {head} condition over the table holds"
    return sentence


def _realize_count(ast: LfNode, caption: str) -> str | None:
    if _fn(ast, "eq") and _fn(ast.args[0], "count"):
        n = _lit(ast.args[1])
        if n is not None:
            return f"there are {n} {_view_phrase(ast.args[0].args[0])} in {caption}"
    return None


def _realize_unique(ast: LfNode, caption: str) -> str | None:
    if _fn(ast, "only"):
        view = ast.args[0]
        if isinstance(view, Apply) and view.function in _FILTER_RELATION:
            col, val = _lit(view.args[1]), _lit(view.args[2])
            if col and val:
                relation = _FILTER_RELATION[view.function]
                return f"there is only one row whose {col} {relation} {val} in {caption}"
        return f"there is only one of the {_view_phrase(view)} in {caption}"
    if _fn(ast, "and"):
        for arg in ast.args:
            inner = _realize_unique(arg, caption)
            if inner is not None:
                return inner
    return None


def _realize_superlative(ast: LfNode, caption: str) -> str | None:
    if _fn(ast, "eq"):
        left, right = ast.args
        value = _lit(right)
        if value is not None and _fn(left, "max", "min"):
            col = _lit(left.args[1])
            word = "highest" if left.function == "max" else "lowest"
            if col:
                return f"the {word} {col} in {caption} is {value}"
        if value is not None and _fn(left, "hop") and _fn(left.args[0], "argmax", "argmin"):
            pick = left.args[0]
            sort_col, key_col = _lit(pick.args[1]), _lit(left.args[1])
            word = "highest" if pick.function == "argmax" else "lowest"
            if sort_col and key_col:
                return f"{value} is the {key_col} with the {word} {sort_col} in {caption}"
    return None


def _realize_ordinal(ast: LfNode, caption: str) -> str | None:
    if not _fn(ast, "eq"):
        return None
    left, right = ast.args
    value = _lit(right)
    if value is None:
        return None
    if _fn(left, "nth_max", "nth_min"):
        col, rank = _lit(left.args[1]), _lit(left.args[2])
        word = "highest" if left.function == "nth_max" else "lowest"
        if col and rank and rank.isdigit():
            return f"the {_ordinal(int(rank))} {word} {col} in {caption} is {value}"
    if _fn(left, "hop") and _fn(left.args[0], "nth_argmax", "nth_argmin"):
        pick = left.args[0]
        sort_col, key_col, rank = _lit(pick.args[1]), _lit(left.args[1]), _lit(pick.args[2])
        word = "highest" if pick.function == "nth_argmax" else "lowest"
        if sort_col and key_col and rank and rank.isdigit():
            return (
                f"{value} is the {key_col} with the {_ordinal(int(rank))} "
                f"{word} {sort_col} in {caption}"
            )
    return None


def _realize_aggregation(ast: LfNode, caption: str) -> str | None:
    if _fn(ast, "eq", "round_eq"):
        left, value = ast.args[0], _lit(ast.args[1])
        if value is not None and _fn(left, "avg", "sum"):
            col = _lit(left.args[1])
            word = "average" if left.function == "avg" else "total"
            if col:
                return f"the {word} {col} in {caption} is {value}"
    return None


def _realize_majority(ast: LfNode, caption: str) -> str | None:
    if isinstance(ast, Apply) and (ast.function.startswith("most_") or ast.function.startswith("all_")):
        quant, _, suffix = ast.function.partition("_")
        col, val = _lit(ast.args[1]), _lit(ast.args[2])
        if col and val and suffix in _QUANT_RELATION:
            scope = "most of" if quant == "most" else "all of"
            return f"{scope} the rows in {caption} have {col} {_QUANT_RELATION[suffix]} {val}"
    return None


def _hop_subject(node: LfNode) -> tuple[str, str] | None:
    """(column, row description) for hop { filter_eq { ... } ; col }."""
    if _fn(node, "hop"):
        col = _lit(node.args[1])
        view = node.args[0]
        if col and _fn(view, "filter_eq"):
            key = _lit(view.args[2])
            if key:
                return col, key
    return None


def _realize_comparative(ast: LfNode, caption: str) -> str | None:
    if _fn(ast, "greater", "less"):
        left, right = _hop_subject(ast.args[0]), _hop_subject(ast.args[1])
        if left and right:
            word = "higher" if ast.function == "greater" else "lower"
            return f"the {left[0]} of {left[1]} is {word} than that of {right[1]} in {caption}"
    if _fn(ast, "eq", "round_eq") and _fn(ast.args[0], "diff"):
        value = _lit(ast.args[1])
        left, right = (_hop_subject(a) for a in ast.args[0].args)
        if value and left and right:
            return (
                f"the difference between the {left[0]} of {left[1]} and "
                f"that of {right[1]} in {caption} is {value}"
            )
    return None


_REALIZERS = {
    "count": _realize_count,
    "unique": _realize_unique,
    "superlative": _realize_superlative,
    "ordinal": _realize_ordinal,
    "aggregation": _realize_aggregation,
    "majority": _realize_majority,
    "comparative": _realize_comparative,
}
