"""Vocabulary and token sequences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..glyphs import CHARSET

T_MAX = 16


class Vocab:
    """Dense ids: EOS=0, charset symbols 1..n, then BOS and PAD.

    Decoding only ever emits EOS or a charset symbol, which keeps the
    decodable ids contiguous in ``[0, n]``.
    """

    def __init__(self, charset: str = CHARSET):
        if not charset or len(set(charset)) != len(charset):
            raise ValueError("charset must be non-empty without duplicates")
        if charset != charset.upper():
            raise ValueError("charset is uppercase only")
        self.charset = charset
        self.eos = 0
        self.bos = len(charset) + 1
        self.pad = len(charset) + 2
        self._ids = {c: i + 1 for i, c in enumerate(charset)}

    def __len__(self) -> int:
        return len(self.charset) + 3

    def __repr__(self) -> str:
        return f"Vocab({self.charset!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and other.charset == self.charset

    @property
    def n_decodable(self) -> int:
        return len(self.charset) + 1

    def encode(self, text: str, t_max: int | None = None) -> "TokenSeq":
        ids = [self._ids[c] for c in text] + [self.eos]
        if t_max is None:
            t_max = len(ids)
        if len(ids) > t_max:
            raise ValueError(f"{text!r} does not fit in {t_max} positions")
        ids += [self.pad] * (t_max - len(ids))
        return TokenSeq(tuple(ids), self)

    def token_text(self, i: int) -> str:
        if i == self.eos:
            return "[E]"
        if i == self.bos:
            return "[B]"
        if i == self.pad:
            return "[P]"
        return self.charset[i - 1]


@dataclass(frozen=True)
class TokenSeq:
    ids: tuple[int, ...]
    vocab: Vocab

    def __post_init__(self):
        v = self.vocab
        if any(not 0 <= i < len(v) for i in self.ids):
            raise ValueError(f"token id out of range in {self.ids}")
        if v.bos in self.ids:
            raise ValueError("BOS cannot appear in a decoded sequence")
        if self.ids.count(v.eos) > 1:
            raise ValueError("at most one EOS")
        if v.eos in self.ids:
            tail = self.ids[self.ids.index(v.eos) + 1:]
            if any(i != v.pad for i in tail):
                raise ValueError("only PAD may follow EOS")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def text(self) -> str:
        out = []
        for i in self.ids:
            if i == self.vocab.eos:
                break
            if i != self.vocab.pad:
                out.append(self.vocab.charset[i - 1])
        return "".join(out)


def canonicalize(ids: Sequence[int], vocab: Vocab) -> TokenSeq:
    """Everything after the first EOS becomes PAD."""
    ids = list(ids)
    if vocab.eos in ids:
        k = ids.index(vocab.eos)
        ids[k + 1:] = [vocab.pad] * (len(ids) - k - 1)
    return TokenSeq(tuple(ids), vocab)
