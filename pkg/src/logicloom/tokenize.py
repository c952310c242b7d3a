"""Tokenizers shared by serialization, filtering, and text metrics."""

from __future__ import annotations

import re

_PUNCT = re.compile(r"([^\w\s])")


def whitespace_tokenize(text: str) -> list[str]:
    """Split on whitespace. The default for model inputs and filter budgets."""
    return text.split()


def text_tokenize(text: str) -> list[str]:
    """Lowercase and split after spacing out punctuation. The default for text metrics."""
    return _PUNCT.sub(r" \1 ", text.lower()).split()


TOKENIZERS = {
    "whitespace": whitespace_tokenize,
    "text": text_tokenize,
}


def get_tokenizer(name: str):
    try:
        return TOKENIZERS[name]
    except KeyError:
        raise ValueError(f"unknown tokenizer {name!r}; choose from {sorted(TOKENIZERS)}") from None
