"""Annotation data model, JSON-lines manifests, dataset views and
leakage-safe train/validation splitting."""

from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaViolation
from .plate_grammar import normalize

SCHEMA_VERSION = "lprkit.manifest/1"
BBOX_TOLERANCE = 1.0


class Category(str, enum.Enum):
    LICENSE_PLATE = "license_plate"
    PARTIAL_TEXT = "partial_text"
    OBSCURED = "obscured"
    UNREADABLE = "unreadable"
    BARELY_READABLE = "barely_readable"
    DOUBLE_PLATE = "double_plate"


_CATEGORY_ORDER = {c: i for i, c in enumerate(Category)}


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    image_size: tuple[int, int]
    polygon: tuple[tuple[float, float], ...]
    bbox: tuple[float, float, float, float]
    categories: frozenset[Category]
    text: str | None = None
    confidence: float | None = None

    @property
    def is_prediction(self) -> bool:
        return self.confidence is not None

    @property
    def sorted_categories(self) -> list[Category]:
        return sorted(self.categories, key=_CATEGORY_ORDER.__getitem__)

    def validate(self, lineno: int | None = None) -> None:
        def fail(inv, detail=""):
            raise SchemaViolation(inv, f"{self.image_id}: {detail}" if detail else self.image_id, lineno)

        if len(self.polygon) < 3:
            fail("polygon has at least 3 points")
        x, y, w, h = self.bbox
        if not (w > 0 and h > 0):
            fail("bbox width and height positive", f"{self.bbox}")
        iw, ih = self.image_size
        if x < 0 or y < 0 or x + w > iw or y + h > ih:
            fail("bbox inside image bounds", f"{self.bbox} vs {self.image_size}")
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        tight = (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))
        if any(abs(a - b) > BBOX_TOLERANCE for a, b in zip(self.bbox, tight)):
            fail("bbox is the tight bound of polygon", f"{self.bbox} vs {tight}")
        if not self.categories:
            fail("categories non-empty")
        if Category.UNREADABLE in self.categories:
            if self.text is not None:
                fail("unreadable records carry no text")
        elif self.text is None and not self.is_prediction:
            fail("readable ground-truth records carry text")
        if self.text is not None and not self.text:
            fail("text non-empty when present")
        if self.confidence is not None and not 0 <= self.confidence <= 1:
            fail("confidence in [0, 1]", str(self.confidence))


@dataclass(frozen=True)
class ImageEntry:
    image: str
    width: int
    height: int
    annotations: tuple[AnnotationRecord, ...] = ()


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ImageEntry, ...] = ()
    provenance: Mapping[str, Any] | None = None
    schema: str = SCHEMA_VERSION

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.image in seen:
                raise SchemaViolation("image ids unique", e.image)
            seen.add(e.image)
            for r in e.annotations:
                if r.image_id != e.image:
                    raise SchemaViolation("record image_id resolves", f"{r.image_id} under {e.image}")

    @property
    def records(self) -> list[AnnotationRecord]:
        return [r for e in self.entries for r in e.annotations]

    def __len__(self) -> int:
        return len(self.entries)

    def with_provenance(self, provenance: Mapping[str, Any] | None) -> "Manifest":
        return replace(self, provenance=provenance)


def make_record(image: str, width: int, height: int, polygon: Sequence[Sequence[float]],
                categories: Iterable[str | Category], text: str | None = None,
                confidence: float | None = None, bbox: Sequence[float] | None = None) -> AnnotationRecord:
    """Build a record, deriving the bbox from the polygon when not given."""
    poly = tuple((p[0], p[1]) for p in polygon)
    if bbox is None:
        xs = [p[0] for p in poly]
        ys = [p[1] for p in poly]
        bbox = (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))
    cats = frozenset(Category(c) for c in categories)
    rec = AnnotationRecord(image, (width, height), poly, tuple(bbox), cats,
                           None if text is None else normalize(text), confidence)
    rec.validate()
    return rec


def box_record(image: str, width: int, height: int, bbox: Sequence[float],
               categories: Iterable[str | Category] = (Category.LICENSE_PLATE,),
               text: str | None = None, confidence: float | None = None) -> AnnotationRecord:
    """Record for a plain axis-aligned box (polygon = its four corners)."""
    x, y, w, h = bbox
    poly = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
    return make_record(image, width, height, poly, categories, text, confidence, bbox)


def import_bbox_list(lines: Iterable[str], default_category: str = "license_plate") -> Manifest:
    """Import ``image width height x y w h [text]`` whitespace-separated rows."""
    entries: dict[str, list] = {}
    sizes: dict[str, tuple[int, int]] = {}
    for lineno, raw in enumerate(lines, 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) not in (7, 8):
            raise ParseError("expected 'image width height x y w h [text]'", lineno)
        try:
            img, w, h = parts[0], int(parts[1]), int(parts[2])
            box = tuple(float(v) for v in parts[3:7])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        text = parts[7] if len(parts) == 8 else None
        cats = [default_category] if text is not None else ["unreadable"]
        sizes[img] = (w, h)
        entries.setdefault(img, []).append(box_record(img, w, h, box, cats, text))
    return Manifest(tuple(ImageEntry(i, *sizes[i], tuple(recs)) for i, recs in entries.items()))


# serialization

_ENTRY_KEYS = {"image", "width", "height", "annotations"}
_ANN_KEYS = {"polygon", "bbox", "categories", "text", "confidence"}
_HEADER_KEYS = {"schema", "provenance"}


def _number(v, what, lineno):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaViolation(f"{what} is a finite number", repr(v), lineno)
    return v


def _int(v, what, lineno):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaViolation(f"{what} is an integer", repr(v), lineno)
    return v


def entry_from_json(obj: Any, lineno: int | None = None) -> ImageEntry:
    if not isinstance(obj, dict):
        raise SchemaViolation("entry is a JSON object", type(obj).__name__, lineno)
    unknown = set(obj) - _ENTRY_KEYS
    if unknown:
        raise SchemaViolation("no unknown entry fields", ", ".join(sorted(unknown)), lineno)
    missing = _ENTRY_KEYS - set(obj)
    if missing:
        raise SchemaViolation("required entry fields present", ", ".join(sorted(missing)), lineno)
    image = obj["image"]
    if not isinstance(image, str) or not image:
        raise SchemaViolation("image is a non-empty string", repr(image), lineno)
    width = _int(obj["width"], "width", lineno)
    height = _int(obj["height"], "height", lineno)
    if width <= 0 or height <= 0:
        raise SchemaViolation("image size positive", f"{width}x{height}", lineno)
    anns = obj["annotations"]
    if not isinstance(anns, list):
        raise SchemaViolation("annotations is a list", "", lineno)
    records = []
    for a in anns:
        if not isinstance(a, dict):
            raise SchemaViolation("annotation is a JSON object", "", lineno)
        unknown = set(a) - _ANN_KEYS
        if unknown:
            raise SchemaViolation("no unknown annotation fields", ", ".join(sorted(unknown)), lineno)
        missing = {"polygon", "bbox", "categories"} - set(a)
        if missing:
            raise SchemaViolation("required annotation fields present", ", ".join(sorted(missing)), lineno)
        poly = a["polygon"]
        if not isinstance(poly, list) or not all(isinstance(p, list) and len(p) == 2 for p in poly):
            raise SchemaViolation("polygon is a list of [x, y] pairs", "", lineno)
        poly = tuple((_number(p[0], "polygon x", lineno), _number(p[1], "polygon y", lineno)) for p in poly)
        bbox = a["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise SchemaViolation("bbox is [x, y, w, h]", repr(bbox), lineno)
        bbox = tuple(_number(v, "bbox value", lineno) for v in bbox)
        cats = a["categories"]
        if not isinstance(cats, list):
            raise SchemaViolation("categories is a list", "", lineno)
        try:
            categories = frozenset(Category(c) for c in cats)
        except ValueError:
            bad = [c for c in cats if c not in {m.value for m in Category}]
            raise SchemaViolation("categories from the closed set", ", ".join(map(str, bad)), lineno) from None
        text = a.get("text")
        if text is not None:
            if not isinstance(text, str):
                raise SchemaViolation("text is a string or null", repr(text), lineno)
            text = normalize(text)
        conf = a.get("confidence")
        if conf is not None:
            conf = float(_number(conf, "confidence", lineno))
        rec = AnnotationRecord(image, (width, height), poly, bbox, categories, text, conf)
        rec.validate(lineno)
        records.append(rec)
    return ImageEntry(image, width, height, tuple(records))


def entry_to_json(entry: ImageEntry) -> dict:
    return {
        "image": entry.image,
        "width": entry.width,
        "height": entry.height,
        "annotations": [
            {
                "polygon": [[x, y] for x, y in r.polygon],
                "bbox": list(r.bbox),
                "categories": [c.value for c in r.sorted_categories],
                "text": r.text,
                "confidence": r.confidence,
            }
            for r in entry.annotations
        ],
    }


def dumps_manifest(m: Manifest) -> str:
    lines = []
    header: dict[str, Any] = {"schema": m.schema}
    if m.provenance is not None:
        header["provenance"] = m.provenance
    lines.append(json.dumps(header, sort_keys=True))
    lines.extend(json.dumps(entry_to_json(e)) for e in m.entries)
    return "\n".join(lines) + "\n"


def loads_manifest(text: str) -> Manifest:
    """Parse manifest text. The optional first line is a ``{"schema": ...}`` header."""
    entries = []
    provenance = None
    schema = SCHEMA_VERSION
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, lineno) from None
        if isinstance(obj, dict) and "schema" in obj:
            if entries or lineno != 1:
                raise SchemaViolation("header only on the first line", "", lineno)
            unknown = set(obj) - _HEADER_KEYS
            if unknown:
                raise SchemaViolation("no unknown header fields", ", ".join(sorted(unknown)), lineno)
            if obj["schema"] != SCHEMA_VERSION:
                raise SchemaViolation("supported schema version", repr(obj["schema"]), lineno)
            provenance = obj.get("provenance")
            continue
        entries.append(entry_from_json(obj, lineno))
    return Manifest(tuple(entries), provenance, schema)


def load_manifest(path: str | Path) -> Manifest:
    return loads_manifest(Path(path).read_text(encoding="utf-8"))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_manifest(m: Manifest, path: str | Path) -> None:
    atomic_write_text(path, dumps_manifest(m))


# views

def _records(source: Manifest | Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    return source.records if isinstance(source, Manifest) else list(source)


def select_training_view(source: Manifest | Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    """Every record not tagged unreadable; all are one detection class."""
    return [r for r in _records(source) if Category.UNREADABLE not in r.categories]


def select_validation_view(source: Manifest | Iterable[AnnotationRecord],
                           task: str = "recognition") -> list[AnnotationRecord]:
    """Detection validation mirrors training. Recognition validation keeps
    only clean plates: category set exactly ``{license_plate}`` with text."""
    if task == "detection":
        return select_training_view(source)
    if task != "recognition":
        raise ValueError(f"task must be 'detection' or 'recognition', got {task!r}")
    return [r for r in _records(source)
            if r.categories == {Category.LICENSE_PLATE} and r.text is not None]


# splitting

def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def split_groups(m: Manifest) -> list[list[int]]:
    """Partition entry indices so that images sharing any plate text land in
    the same group. Textless records are keyed by their image."""
    parent = list(range(len(m.entries)))
    owner: dict[str, int] = {}
    for i, e in enumerate(m.entries):
        for r in e.annotations:
            if r.text is None:
                continue
            j = owner.setdefault(r.text, i)
            ri, rj = _find(parent, i), _find(parent, j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(len(m.entries)):
        groups.setdefault(_find(parent, i), []).append(i)
    return list(groups.values())


def leakage_safe_split(m: Manifest, val_ratio: float, seed: int) -> tuple[Manifest, Manifest]:
    """Split so that no plate text occurs on both sides.

    Exactly ``round(val_ratio * n_groups)`` groups go to validation, chosen
    by a seeded shuffle; entry order inside each split follows the input.
    """
    if not 0 < val_ratio < 1:
        raise ValueError("val_ratio must lie in (0, 1)")
    groups = split_groups(m)
    n_val = int(round(val_ratio * len(groups)))
    order = np.random.default_rng(seed).permutation(len(groups))
    val_idx = {i for g in order[:n_val] for i in groups[g]}
    train = tuple(e for i, e in enumerate(m.entries) if i not in val_idx)
    val = tuple(e for i, e in enumerate(m.entries) if i in val_idx)
    return Manifest(train, m.provenance), Manifest(val, m.provenance)


# statistics

@dataclass
class ManifestStats:
    n_images: int = 0
    n_records: int = 0
    per_category: dict[str, int] = field(default_factory=lambda: {c.value: 0 for c in Category})
    multi_category: int = 0
    text_length: dict[int, int] = field(default_factory=dict)
    per_state: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n_images": self.n_images,
            "n_records": self.n_records,
            "per_category": dict(self.per_category),
            "multi_category": self.multi_category,
            "text_length": {str(k): v for k, v in sorted(self.text_length.items())},
            "per_state": dict(sorted(self.per_state.items())),
        }


def manifest_stats(m: Manifest) -> ManifestStats:
    stats = ManifestStats(n_images=len(m.entries))
    lengths: Counter[int] = Counter()
    states: Counter[str] = Counter()
    for r in m.records:
        stats.n_records += 1
        for c in r.categories:
            stats.per_category[c.value] += 1
        if len(r.categories) > 1:
            stats.multi_category += 1
        if r.text is not None:
            lengths[len(r.text)] += 1
            if len(r.text) >= 2 and r.text[:2].isalpha():
                states[r.text[:2]] += 1
    stats.text_length = dict(lengths)
    stats.per_state = dict(states)
    return stats


__all__ = [
    "AnnotationRecord",
    "Category",
    "ImageEntry",
    "Manifest",
    "ManifestStats",
    "SCHEMA_VERSION",
    "atomic_write_text",
    "box_record",
    "dumps_manifest",
    "import_bbox_list",
    "leakage_safe_split",
    "load_manifest",
    "loads_manifest",
    "make_record",
    "manifest_stats",
    "save_manifest",
    "select_training_view",
    "select_validation_view",
    "split_groups",
]
