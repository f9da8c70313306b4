"""Autoregressive, non-autoregressive and cloze-refinement decoding over a
pluggable recognizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

import numpy as np

from ..errors import ModelContractViolation
from .masks import Permutation, cloze_mask, mask_from_permutation, visible_context
from .tokens import T_MAX, TokenSeq, Vocab, canonicalize

NORM_TOL = 1e-9


class Recognizer(Protocol):
    def __call__(self, x: Any, visible: Mapping[int, int], queried: Sequence[int]) -> np.ndarray:
        """One probability row over the vocabulary per queried position."""
        ...


@dataclass(frozen=True)
class Step:
    position: int
    visible: dict[int, int]
    distribution: np.ndarray
    token: int


@dataclass(frozen=True)
class DecodeResult:
    seq: TokenSeq
    steps: list[Step] = field(default_factory=list)

    @property
    def text(self) -> str:
        return self.seq.text

    def trace_records(self) -> list[dict]:
        v = self.seq.vocab
        return [
            {
                "position": s.position,
                "visible": [[k, s.visible[k]] for k in sorted(s.visible)],
                "token": v.token_text(s.token),
                "distribution": [float(p) for p in s.distribution],
            }
            for s in self.steps
        ]


def query(model: Recognizer, x: Any, visible: Mapping[int, int], queried: Sequence[int],
          vocab: Vocab) -> np.ndarray:
    """Call ``model`` and enforce the output contract."""
    out = np.asarray(model(x, dict(visible), list(queried)), dtype=np.float64)
    if out.shape != (len(queried), len(vocab)):
        raise ModelContractViolation(f"expected shape {(len(queried), len(vocab))}, got {out.shape}")
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        raise ModelContractViolation("distributions must be finite and non-negative")
    sums = out.sum(axis=1)
    bad = np.abs(sums - 1.0) > NORM_TOL
    if bad.any():
        raise ModelContractViolation(f"rows for positions {np.asarray(queried)[bad].tolist()} sum to {sums[bad].tolist()}")
    return out


def greedy(dist: np.ndarray, vocab: Vocab) -> int:
    # BOS and PAD are never emitted
    return int(np.argmax(dist[:vocab.n_decodable]))


def decode_ar(model: Recognizer, x: Any, perm: Permutation | None = None, vocab: Vocab | None = None,
              t_max: int = T_MAX) -> DecodeResult:
    """Greedy decode visiting positions in ``perm`` order.

    Step t queries position ``perm[t]`` with the tokens already decoded at
    ``perm[0..t-1]`` bound to their absolute positions. Under the identity
    order decoding stops at the first EOS; other orders fill every position
    and are truncated at the first EOS afterwards.
    """
    vocab = vocab or Vocab()
    perm = perm or Permutation.identity(t_max)
    if len(perm) != t_max:
        raise ValueError(f"permutation length {len(perm)} != t_max {t_max}")
    mask = mask_from_permutation(perm)
    tokens: list[int | None] = [None] * t_max
    steps = []
    for pos in perm.order:
        visible = visible_context(mask, pos, tokens)
        dist = query(model, x, visible, [pos], vocab)[0]
        tok = greedy(dist, vocab)
        tokens[pos] = tok
        steps.append(Step(pos, visible, dist, tok))
        if perm.is_identity and tok == vocab.eos:
            break
    ids = [vocab.pad if t is None else t for t in tokens]
    return DecodeResult(canonicalize(ids, vocab), steps)


def decode_nar(model: Recognizer, x: Any, vocab: Vocab | None = None, t_max: int = T_MAX) -> DecodeResult:
    """All positions in one context-free query."""
    vocab = vocab or Vocab()
    positions = list(range(t_max))
    dists = query(model, x, {}, positions, vocab)
    ids = [greedy(d, vocab) for d in dists]
    steps = [Step(p, {}, d, t) for p, d, t in zip(positions, dists, ids)]
    return DecodeResult(canonicalize(ids, vocab), steps)


def cloze_distributions(model: Recognizer, x: Any, ids: Sequence[int], vocab: Vocab) -> list[Step]:
    """Re-predict each position from all the others."""
    mask = cloze_mask(len(ids))
    steps = []
    for pos in range(len(ids)):
        visible = visible_context(mask, pos, ids)
        dist = query(model, x, visible, [pos], vocab)[0]
        steps.append(Step(pos, visible, dist, greedy(dist, vocab)))
    return steps


def refine_cloze(model: Recognizer, x: Any, seq: TokenSeq, iters: int = 1) -> DecodeResult:
    """Iterative refinement: every position is re-predicted conditioned on
    the current tokens at all other positions, then all are replaced at
    once. ``iters=0`` returns ``seq`` untouched."""
    if iters < 0:
        raise ValueError("iters must be >= 0")
    vocab = seq.vocab
    steps: list[Step] = []
    for _ in range(iters):
        round_steps = cloze_distributions(model, x, seq.ids, vocab)
        steps.extend(round_steps)
        seq = canonicalize([s.token for s in round_steps], vocab)
    return DecodeResult(seq, steps)


def decode_ensemble(model: Recognizer, x: Any, perms: Sequence[Permutation], vocab: Vocab | None = None,
                    t_max: int = T_MAX) -> DecodeResult:
    """Decode under each order and keep the result with the highest sequence
    log-probability (summed over the emitted positions)."""
    vocab = vocab or Vocab()
    best, best_score = None, -np.inf
    for p in perms:
        res = decode_ar(model, x, p, vocab, t_max)
        with np.errstate(divide="ignore"):
            score = float(sum(np.log(s.distribution[s.token]) for s in res.steps))
        if best is None or score > best_score:
            best, best_score = res, score
    return best
