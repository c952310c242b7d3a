"""Byte-level fallback tokenizer.

Used when the model checkpoint ships no tokenizer files: a fixed 260-entry
vocabulary (four specials + 256 byte values) that needs no external data and
round-trips arbitrary UTF-8 text.
"""

from __future__ import annotations

PAD_ID = 0
BOS_ID = 1
SEP_ID = 2
EOS_ID = 3
_BYTE_OFFSET = 4

VOCAB_SIZE = _BYTE_OFFSET + 256


class ByteTokenizer:
    vocab_size = VOCAB_SIZE
    pad_id = PAD_ID
    bos_id = BOS_ID
    sep_id = SEP_ID
    eos_id = EOS_ID

    def encode(self, text: str, max_tokens: int | None = None) -> list[int]:
        ids = [b + _BYTE_OFFSET for b in text.encode("utf-8")]
        return ids[:max_tokens] if max_tokens is not None else ids

    def decode(self, ids) -> str:
        data = bytes(i - _BYTE_OFFSET for i in ids if _BYTE_OFFSET <= i < VOCAB_SIZE)
        return data.decode("utf-8", errors="replace")
