"""AST nodes for logical forms: function applications over literal arguments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .registry import REGISTRY


@dataclass(frozen=True)
class Literal:
    """A run of plain tokens, stored single-space joined."""

    tokens: str

    def __post_init__(self):
        normalized = " ".join(self.tokens.split())
        if not normalized:
            raise ValueError("literal must contain at least one token")
        object.__setattr__(self, "tokens", normalized)


@dataclass(frozen=True)
class Apply:
    """An application of a registered function; arity checked on construction."""

    function: str
    args: tuple["LfNode", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        sig = REGISTRY.get(self.function)
        if sig is None:
            raise ValueError(f"unknown function {self.function!r}")
        if len(self.args) != sig.arity:
            raise ValueError(
                f"arity mismatch for {self.function!r}: expected {sig.arity}, got {len(self.args)}"
            )


LfNode = Union[Apply, Literal]


def iter_applies(node: LfNode) -> Iterator[Apply]:
    """Yield every Apply node in the tree, root first."""
    if isinstance(node, Apply):
        yield node
        for arg in node.args:
            yield from iter_applies(arg)


def contains_function(node: LfNode, name: str) -> bool:
    return any(a.function == name for a in iter_applies(node))
