"""Table-driven recognizer used as a test double and for golden traces."""

from __future__ import annotations

import json
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ..errors import UnnormalizedRow

ANY = "*"
ROW_TOL = 1e-9


def visible_key(visible: Mapping[int, int] | Iterable[tuple[int, int]]) -> frozenset:
    items = visible.items() if isinstance(visible, Mapping) else visible
    return frozenset((int(k), int(v)) for k, v in items)


class MockRecognizer:
    """Lookup by (queried position, visible assignment).

    Keys whose visible part is :data:`ANY` match any context for that
    position, which is how context-free models are written. Unknown keys
    fall back to ``default``. The visible part is a set, so the order in
    which tokens were bound never matters.
    """

    def __init__(self, table: Mapping[tuple[int, Any], Sequence[float]], default: Sequence[float]):
        self.default = self._row(default, "default")
        self.vocab_size = len(self.default)
        self.table: dict[tuple[int, Any], np.ndarray] = {}
        for (pos, vis), row in table.items():
            key = (int(pos), ANY if vis == ANY else visible_key(vis))
            self.table[key] = self._row(row, key)
            if len(self.table[key]) != self.vocab_size:
                raise UnnormalizedRow(f"row {key} has {len(row)} entries, expected {self.vocab_size}")

    @staticmethod
    def _row(row, key) -> np.ndarray:
        arr = np.asarray(row, dtype=np.float64)
        if arr.ndim != 1 or np.any(arr < 0) or abs(arr.sum() - 1.0) > ROW_TOL:
            raise UnnormalizedRow(f"row {key} sums to {arr.sum()!r}")
        arr.setflags(write=False)
        return arr

    @property
    def context_free(self) -> bool:
        return all(vis == ANY for _, vis in self.table)

    def lookup(self, position: int, visible: Mapping[int, int]) -> np.ndarray:
        row = self.table.get((position, visible_key(visible)))
        if row is None:
            row = self.table.get((position, ANY), self.default)
        return row

    def __call__(self, x: Any, visible: Mapping[int, int], queried: Sequence[int]) -> np.ndarray:
        return np.stack([self.lookup(q, visible) for q in queried]) if queried else np.zeros((0, self.vocab_size))

    def to_records(self) -> list[dict]:
        recs = [{"default": self.default.tolist()}]
        for (pos, vis), row in sorted(self.table.items(), key=lambda kv: (kv[0][0], str(sorted(kv[0][1])) if kv[0][1] != ANY else "")):
            recs.append({
                "position": pos,
                "visible": ANY if vis == ANY else sorted([k, v] for k, v in vis),
                "row": row.tolist(),
            })
        return recs

    def dumps(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.to_records())

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "MockRecognizer":
        default = None
        table = {}
        for r in records:
            if "default" in r:
                default = r["default"]
                continue
            vis = r["visible"]
            table[(r["position"], ANY if vis == ANY else tuple(tuple(kv) for kv in vis))] = r["row"]
        if default is None:
            raise ValueError("mock table has no default row")
        return cls(table, default)

    @classmethod
    def loads(cls, text: str) -> "MockRecognizer":
        return cls.from_records(json.loads(line) for line in text.splitlines() if line.strip())


def make_mock_recognizer(table: Mapping[tuple[int, Any], Sequence[float]],
                         default: Sequence[float]) -> MockRecognizer:
    return MockRecognizer(table, default)


def context_free_mock(rows: Sequence[Sequence[float]], default: Sequence[float] | None = None) -> MockRecognizer:
    """Position i always answers ``rows[i]``."""
    default = rows[-1] if default is None else default
    return MockRecognizer({(i, ANY): r for i, r in enumerate(rows)}, default)
