"""Decoding orders and the attention masks they induce.

Positions are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Permutation:
    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"{self.order} is not a permutation of 0..{len(self.order) - 1}")

    def __len__(self) -> int:
        return len(self.order)

    @classmethod
    def identity(cls, T: int) -> "Permutation":
        return cls(tuple(range(T)))

    @property
    def is_identity(self) -> bool:
        return self.order == tuple(range(len(self.order)))

    def reversed(self) -> "Permutation":
        return Permutation(self.order[::-1])


@dataclass(frozen=True, eq=False)
class AttentionMask:
    """``matrix[q, k]`` is True when query position q may see position k."""

    matrix: np.ndarray
    self_visible: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("mask must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other) -> bool:
        return (isinstance(other, AttentionMask) and self.self_visible == other.self_visible
                and np.array_equal(self.matrix, other.matrix))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def visible(self, query: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.matrix[query])]


def gen_permutations(T: int, K: int, rng: np.random.Generator) -> list[Permutation]:
    """Identity, then its reverse, then random orders added in mirrored
    pairs (a random order followed by its reverse). With an odd number of
    random slots the last order is unpaired. Orders are distinct whenever
    ``T! >= K``."""
    if T < 1 or K < 1:
        raise ValueError("T and K must be >= 1")
    ident = Permutation.identity(T)
    perms = [ident]
    if K >= 2:
        perms.append(ident.reversed())
    unique = math.factorial(T) >= K
    if T <= 8:
        pool = [p for p in itertools.permutations(range(T))]
    else:
        pool = None
    while len(perms) < K:
        taken = {p.order for p in perms}
        if pool is not None:
            cands = [p for p in pool if not unique or p not in taken]
            if unique:
                # prefer orders whose mirror is also free so pairs stay intact
                paired = [p for p in cands if p[::-1] not in taken and p[::-1] != p]
                cands = paired or cands
            order = cands[int(rng.integers(len(cands)))]
        else:
            order = tuple(int(i) for i in rng.permutation(T))
            if unique and (order in taken or order[::-1] in taken):
                continue
        perms.append(Permutation(order))
        if len(perms) < K:
            perms.append(Permutation(order[::-1]))
    return perms


def mask_from_permutation(p: Permutation) -> AttentionMask:
    """Query ``p[t]`` sees exactly the positions ``p[0..t-1]``."""
    T = len(p)
    m = np.zeros((T, T), dtype=bool)
    for t, q in enumerate(p.order):
        m[q, list(p.order[:t])] = True
    return AttentionMask(m)


def causal_mask(T: int) -> AttentionMask:
    return AttentionMask(np.tril(np.ones((T, T), dtype=bool), k=-1))


def cloze_mask(T: int) -> AttentionMask:
    """Every position sees every other position, never itself."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return AttentionMask(~np.eye(T, dtype=bool))


def visible_context(mask: AttentionMask, query: int, tokens: Sequence[int | None]) -> dict[int, int]:
    """Tokens the query may condition on, keyed by absolute position."""
    return {k: int(tokens[k]) for k in mask.visible(query) if tokens[k] is not None}

