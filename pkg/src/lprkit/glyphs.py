"""Glyph sources: a built-in 5x7 bitmap font and TrueType font files."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import GlyphMissing

CHARSET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"

_FONT_5X7 = {
    "0": ["01110", "10001", "10011", "10101", "11001", "10001", "01110"],
    "1": ["00100", "01100", "00100", "00100", "00100", "00100", "01110"],
    "2": ["01110", "10001", "00001", "00010", "00100", "01000", "11111"],
    "3": ["11111", "00010", "00100", "00010", "00001", "10001", "01110"],
    "4": ["00010", "00110", "01010", "10010", "11111", "00010", "00010"],
    "5": ["11111", "10000", "11110", "00001", "00001", "10001", "01110"],
    "6": ["00110", "01000", "10000", "11110", "10001", "10001", "01110"],
    "7": ["11111", "00001", "00010", "00100", "01000", "01000", "01000"],
    "8": ["01110", "10001", "10001", "01110", "10001", "10001", "01110"],
    "9": ["01110", "10001", "10001", "01111", "00001", "00010", "01100"],
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "B": ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
    "C": ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
    "D": ["11100", "10010", "10001", "10001", "10001", "10010", "11100"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "F": ["11111", "10000", "10000", "11110", "10000", "10000", "10000"],
    "G": ["01110", "10001", "10000", "10111", "10001", "10001", "01111"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "I": ["01110", "00100", "00100", "00100", "00100", "00100", "01110"],
    "J": ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "M": ["10001", "11011", "10101", "10101", "10001", "10001", "10001"],
    "N": ["10001", "10001", "11001", "10101", "10011", "10001", "10001"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "Q": ["01110", "10001", "10001", "10001", "10101", "10010", "01101"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "S": ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "U": ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
    "V": ["10001", "10001", "10001", "10001", "10001", "01010", "00100"],
    "W": ["10001", "10001", "10001", "10101", "10101", "10101", "01010"],
    "X": ["10001", "10001", "01010", "00100", "01010", "10001", "10001"],
    "Y": ["10001", "10001", "10001", "01010", "00100", "00100", "00100"],
    "Z": ["11111", "00001", "00010", "00100", "01000", "10000", "11111"],
}


class GlyphSource(Protocol):
    id: str

    def rasterize(self, char: str, height: int) -> np.ndarray:
        """Return a float alpha bitmap in [0, 1] of exactly ``height`` rows."""
        ...


class BitmapGlyphs:
    """Deterministic 5x7 pixel font scaled by nearest-neighbour replication."""

    id = "builtin-5x7"

    def rasterize(self, char: str, height: int) -> np.ndarray:
        rows = _FONT_5X7.get(char.upper())
        if rows is None:
            raise GlyphMissing(f"{self.id} has no glyph for {char!r}")
        if height < 8:
            raise ValueError("glyph height must be at least 8 px")
        base = np.array([[c == "1" for c in r] for r in rows], dtype=np.float64)
        ri = np.arange(height) * 7 // height
        width = max(5, round(height * 5 / 7))
        ci = np.arange(width) * 5 // width
        return base[np.ix_(ri, ci)]


class TrueTypeGlyphs:
    """Glyphs rasterized from a TrueType/OpenType font file with Pillow."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.id = self.path.name

    @lru_cache(maxsize=512)
    def rasterize(self, char: str, height: int) -> np.ndarray:
        from PIL import Image, ImageDraw, ImageFont

        font = ImageFont.truetype(str(self.path), size=height)
        left, top, right, bottom = font.getbbox(char)
        if right <= left or bottom <= top:
            raise GlyphMissing(f"{self.id} renders {char!r} empty")
        canvas = Image.new("L", (right - left, bottom - top), 0)
        ImageDraw.Draw(canvas).text((-left, -top), char, fill=255, font=font)
        alpha = np.asarray(canvas, dtype=np.float64) / 255.0
        if not alpha.any():
            raise GlyphMissing(f"{self.id} renders {char!r} empty")
        # scale so the glyph box is exactly `height` rows tall
        w = max(1, round(alpha.shape[1] * height / alpha.shape[0]))
        img = Image.fromarray((alpha * 255).astype(np.uint8)).resize((w, height), Image.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0


def load_font_directory(directory: str | Path) -> list[TrueTypeGlyphs]:
    """All ``.ttf``/``.otf`` fonts under ``directory``, sorted by path."""
    root = Path(directory)
    paths = sorted(p for p in root.rglob("*") if p.suffix.lower() in {".ttf", ".otf"})
    return [TrueTypeGlyphs(p) for p in paths]


def check_coverage(glyphs: GlyphSource, charset: str = CHARSET, height: int = 8) -> None:
    for ch in charset:
        bitmap = glyphs.rasterize(ch, height)
        if bitmap.size == 0 or not bitmap.any():
            raise GlyphMissing(f"{glyphs.id} has an empty glyph for {ch!r}")
