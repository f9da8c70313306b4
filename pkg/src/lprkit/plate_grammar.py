"""Indian license-plate grammar: parsing, sampling and multi-line layout.

A plate reads ``SS DD LLL NNNN``: a two-letter state code, a one or two
digit district (RTO) code, an optional series of up to three letters and a
four digit number. Synthetic plates may be broken over several lines after
the state, district or series code.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyRegistry, MalformedPlate, UnknownStateCode

__all__ = [
    "BreakPosition",
    "PlateFields",
    "PlateLayout",
    "StateRegistry",
    "canonical_text",
    "default_registry",
    "layout_from_breaks",
    "layout_plate",
    "load_registry",
    "normalize",
    "parse_plate",
    "parse_registry",
    "sample_plate",
    "break_probability",
    "PRIMARY_BREAK_PROB",
    "EXTRA_BREAK_PROB",
    "SERIES_LENGTH_PROBS",
]

_PLATE_RE = re.compile(r"([A-Z]{2})([0-9]{1,2})([A-Z]{0,3})([0-9]{4})")
_WS_RE = re.compile(r"\s+")

PRIMARY_BREAK_PROB = 0.5
EXTRA_BREAK_PROB = 0.05
MAX_LINES = 3

# P(series length = 0, 1, 2, 3) used by sample_plate.
SERIES_LENGTH_PROBS = (0.05, 0.25, 0.60, 0.10)
# RTOs avoid I and O in series codes (confusable with 1 and 0).
SERIES_LETTERS = "ABCDEFGHJKLMNPQRSTUVWXYZ"


def normalize(text: str) -> str:
    """Uppercase ``text`` and drop all whitespace, newlines included."""
    return _WS_RE.sub("", text).upper()


class StateRegistry(Mapping[str, float]):
    """Ordered mapping of valid state codes to positive sampling weights."""

    def __init__(self, weights: Mapping[str, float] | Iterable[tuple[str, float]]):
        items = weights.items() if isinstance(weights, Mapping) else weights
        self._weights: dict[str, float] = {}
        for code, w in items:
            code = code.strip().upper()
            if not re.fullmatch(r"[A-Z]{2}", code):
                raise ValueError(f"invalid state code {code!r}")
            w = float(w)
            if not w > 0:
                raise ValueError(f"weight for {code} must be positive, got {w}")
            self._weights[code] = w

    def __getitem__(self, code: str) -> float:
        return self._weights[code]

    def __iter__(self):
        return iter(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __repr__(self) -> str:
        return f"StateRegistry({self._weights!r})"

    def probabilities(self) -> tuple[list[str], np.ndarray]:
        codes = list(self._weights)
        w = np.array([self._weights[c] for c in codes], dtype=np.float64)
        return codes, w / w.sum()


def parse_registry(text: str) -> StateRegistry:
    """Parse ``STATE_CODE<TAB>weight`` lines; ``#`` starts a comment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise ValueError(f"registry line {lineno}: expected 'CODE<TAB>weight', got {raw!r}")
        try:
            entries.append((parts[0], float(parts[1])))
        except ValueError:
            raise ValueError(f"registry line {lineno}: bad weight {parts[1]!r}") from None
    return StateRegistry(entries)


def load_registry(path: str | Path) -> StateRegistry:
    return parse_registry(Path(path).read_text(encoding="utf-8"))


def default_registry() -> StateRegistry:
    """All Indian state and union-territory codes with equal weight."""
    text = resources.files("lprkit").joinpath("data/states.tsv").read_text(encoding="utf-8")
    return parse_registry(text)


@dataclass(frozen=True)
class PlateFields:
    state_code: str
    district_code: str
    series_code: str
    number: str

    def __post_init__(self):
        if not re.fullmatch(r"[A-Z]{2}", self.state_code):
            raise MalformedPlate(f"state code must be 2 letters: {self.state_code!r}")
        if not re.fullmatch(r"[0-9]{1,2}", self.district_code):
            raise MalformedPlate(f"district code must be 1-2 digits: {self.district_code!r}")
        if not re.fullmatch(r"[A-Z]{0,3}", self.series_code):
            raise MalformedPlate(f"series code must be 0-3 letters: {self.series_code!r}")
        if not re.fullmatch(r"[0-9]{4}", self.number):
            raise MalformedPlate(f"number must be 4 digits: {self.number!r}")

    @property
    def text(self) -> str:
        return self.state_code + self.district_code + self.series_code + self.number


def parse_plate(text: str, registry: Mapping[str, float] | None = None) -> PlateFields:
    """Decompose a plate string into its grammar fields.

    The grammar admits at most one decomposition, since the series letters
    separate the district digits from the number. ``registry=None`` skips the
    state-code check; pass :func:`default_registry` for the full Indian list.

    Raises:
        MalformedPlate: the normalized text has no valid decomposition.
        UnknownStateCode: the state code is not in ``registry``.
    """
    norm = normalize(text)
    m = _PLATE_RE.fullmatch(norm)
    if m is None:
        raise MalformedPlate(f"{text!r} does not match the plate grammar")
    fields = PlateFields(*m.groups())
    if registry is not None and fields.state_code not in registry:
        raise UnknownStateCode(f"state code {fields.state_code!r} not in registry")
    return fields


def sample_plate(rng: np.random.Generator, registry: Mapping[str, float]) -> PlateFields:
    """Draw a random plate; the state is picked proportionally to its weight."""
    if not registry:
        raise EmptyRegistry("state registry is empty")
    if not isinstance(registry, StateRegistry):
        registry = StateRegistry(registry)
    codes, probs = registry.probabilities()
    state = codes[int(rng.choice(len(codes), p=probs))]
    district = f"{int(rng.integers(1, 100)):02d}"
    n_series = int(rng.choice(len(SERIES_LENGTH_PROBS), p=SERIES_LENGTH_PROBS))
    series = "".join(SERIES_LETTERS[i] for i in rng.integers(0, len(SERIES_LETTERS), size=n_series))
    number = f"{int(rng.integers(1, 10000)):04d}"
    return PlateFields(state, district, series, number)


class BreakPosition(enum.IntEnum):
    AFTER_STATE = 0
    AFTER_DISTRICT = 1
    AFTER_SERIES = 2


@dataclass(frozen=True)
class PlateLayout:
    fields: PlateFields
    break_positions: frozenset[BreakPosition] = field(default_factory=frozenset)
    lines: tuple[str, ...] = ()

    def __post_init__(self):
        expected = _split_lines(self.fields, self.break_positions)
        if not self.lines:
            object.__setattr__(self, "lines", expected)
        elif tuple(self.lines) != expected:
            raise ValueError(f"lines {self.lines!r} inconsistent with breaks {sorted(self.break_positions)}")
        if not 1 <= len(self.lines) <= MAX_LINES:
            raise ValueError(f"layout must have 1..{MAX_LINES} lines, got {len(self.lines)}")


def _eligible_breaks(fields: PlateFields) -> list[BreakPosition]:
    if fields.series_code:
        return list(BreakPosition)
    # both remaining positions border the empty series code
    return [BreakPosition.AFTER_STATE]


def _split_lines(fields: PlateFields, breaks: Iterable[BreakPosition]) -> tuple[str, ...]:
    parts = (fields.state_code, fields.district_code, fields.series_code, fields.number)
    breaks = set(breaks)
    bad = breaks.difference(_eligible_breaks(fields))
    if bad:
        raise ValueError(f"break positions {sorted(bad)} not eligible for {fields.text}")
    lines, cur = [], ""
    for i, part in enumerate(parts):
        cur += part
        if i < 3 and BreakPosition(i) in breaks:
            lines.append(cur)
            cur = ""
    lines.append(cur)
    return tuple(lines)


def layout_from_breaks(fields: PlateFields, breaks: Iterable[BreakPosition]) -> PlateLayout:
    return PlateLayout(fields, frozenset(breaks))


def layout_plate(fields: PlateFields, rng) -> PlateLayout:
    """Randomly break a plate over one to three lines.

    With probability 0.5 a single break is placed at a uniformly chosen
    eligible position; every eligible position then independently gains a
    break with probability 0.05. If all three positions end up broken, the
    non-primary district break is dropped (or the state break when the
    district break is the primary one) so that at most three lines remain.

    ``rng`` needs ``random()`` and ``integers(n)``; a numpy Generator works.
    """
    eligible = _eligible_breaks(fields)
    breaks: set[BreakPosition] = set()
    primary = None
    if rng.random() < PRIMARY_BREAK_PROB:
        primary = eligible[int(rng.integers(len(eligible)))]
        breaks.add(primary)
    for pos in eligible:
        if rng.random() < EXTRA_BREAK_PROB:
            breaks.add(pos)
    if len(breaks) >= MAX_LINES:
        drop = BreakPosition.AFTER_DISTRICT
        if primary == BreakPosition.AFTER_DISTRICT:
            drop = BreakPosition.AFTER_STATE
        breaks.discard(drop)
    return layout_from_breaks(fields, breaks)


def break_probability(fields: PlateFields) -> float:
    """Closed-form probability that :func:`layout_plate` inserts any break."""
    k = len(_eligible_breaks(fields))
    return 1.0 - (1.0 - PRIMARY_BREAK_PROB) * (1.0 - EXTRA_BREAK_PROB) ** k


def canonical_text(layout: PlateLayout | Sequence[str]) -> str:
    lines = layout.lines if isinstance(layout, PlateLayout) else layout
    return normalize("".join(lines))
