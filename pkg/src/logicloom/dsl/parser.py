"""Parser and canonical printer for the surface syntax `f { a ; b ; ... }`.

The lexer treats `{`, `}`, and `;` as singleton tokens wherever they appear,
so whitespace is immaterial. A bare word run is a literal, except the run
"all_rows", which always denotes the zero-argument apply (consequently a
literal cannot be spelled exactly `all_rows`; the canonical printer emits
zero-argument applies bare). Registry membership and arity are checked here,
so a returned AST always satisfies the tree invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import Apply, Literal, LfNode
from .registry import ALL_ROWS, REGISTRY


class LfParseError(ValueError):
    """Parse failure; `span` is the (start, end) character range at fault."""

    def __init__(self, message: str, surface: str, span: tuple[int, int]):
        self.span = span
        start, end = span
        snippet = surface[start:end] or surface[max(0, start - 5):start + 5]
        super().__init__(f"{message} at {start}..{end}: {snippet!r}")


@dataclass(frozen=True)
class _Token:
    text: str
    start: int
    end: int


def _lex(surface: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(surface)
    while i < n:
        ch = surface[i]
        if ch.isspace():
            i += 1
        elif ch in "{};":
            tokens.append(_Token(ch, i, i + 1))
            i += 1
        else:
            j = i
            while j < n and not surface[j].isspace() and surface[j] not in "{};":
                j += 1
            tokens.append(_Token(surface[i:j], i, j))
            i = j
    return tokens


def parse_lf(surface: str) -> Apply:
    """Parse a surface logical form into an AST rooted at a function application."""
    tokens = _lex(surface)
    if not tokens:
        raise LfParseError("empty logical form", surface, (0, 0))
    node, pos = _parse_expr(tokens, 0, surface)
    if pos != len(tokens):
        tok = tokens[pos]
        if tok.text == "}":
            raise LfParseError("unbalanced braces: unexpected '}'", surface, (tok.start, tok.end))
        raise LfParseError("unexpected trailing input", surface, (tok.start, tokens[-1].end))
    if not isinstance(node, Apply):
        raise LfParseError("expected a function application", surface, (tokens[0].start, tokens[-1].end))
    return node


def _parse_expr(tokens: list[_Token], pos: int, surface: str) -> tuple[LfNode, int]:
    if pos >= len(tokens) or tokens[pos].text in "{};":
        tok = tokens[pos] if pos < len(tokens) else tokens[-1]
        what = f"found {tok.text!r}" if pos < len(tokens) else "found end of input"
        raise LfParseError(f"expected expression, {what}", surface, (tok.start, tok.end))
    start = pos
    while pos < len(tokens) and tokens[pos].text not in "{};":
        pos += 1
    words = tokens[start:pos]
    span = (words[0].start, words[-1].end)
    name = " ".join(w.text for w in words)

    if pos < len(tokens) and tokens[pos].text == "{":
        sig = REGISTRY.get(name)
        if sig is None:
            raise LfParseError(f"unknown function {name!r}", surface, span)
        args, pos = _parse_args(tokens, pos, surface)
        if len(args) != sig.arity:
            raise LfParseError(
                f"arity mismatch for {name!r}: expected {sig.arity} argument(s), got {len(args)}",
                surface, span,
            )
        return Apply(name, tuple(args)), pos

    if name == ALL_ROWS:
        return Apply(ALL_ROWS), pos
    return Literal(name), pos


def _parse_args(tokens: list[_Token], pos: int, surface: str) -> tuple[list[LfNode], int]:
    open_tok = tokens[pos]
    pos += 1  # consume '{'
    args: list[LfNode] = []
    if pos < len(tokens) and tokens[pos].text == "}":
        return args, pos + 1
    while True:
        if pos >= len(tokens):
            raise LfParseError("unbalanced braces: missing '}'", surface, (open_tok.start, len(surface)))
        if tokens[pos].text == ";":
            tok = tokens[pos]
            raise LfParseError("dangling separator", surface, (tok.start, tok.end))
        node, pos = _parse_expr(tokens, pos, surface)
        args.append(node)
        if pos >= len(tokens):
            raise LfParseError("unbalanced braces: missing '}'", surface, (open_tok.start, len(surface)))
        if tokens[pos].text == "}":
            return args, pos + 1
        if tokens[pos].text == ";":
            pos += 1
            if pos < len(tokens) and tokens[pos].text == "}":
                tok = tokens[pos - 1]
                raise LfParseError("dangling separator", surface, (tok.start, tok.end))
            continue
        tok = tokens[pos]
        raise LfParseError(f"expected ';' or '}}', found {tok.text!r}", surface, (tok.start, tok.end))


def print_lf(node: LfNode) -> str:
    """Canonical surface form: single spaces around braces and separators.

    parse_lf(print_lf(x)) == x for every valid AST (literals spelled exactly
    `all_rows` excepted; see module docstring).
    """
    if isinstance(node, Literal):
        return node.tokens
    if not node.args:
        return node.function
    inner = " ; ".join(print_lf(arg) for arg in node.args)
    return f"{node.function} {{ {inner} }}"


def canonical_lf(surface: str) -> str:
    """parse + print when parseable, trimmed raw text otherwise."""
    try:
        return print_lf(parse_lf(surface))
    except LfParseError:
        return surface.strip()
