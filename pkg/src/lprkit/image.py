"""Labeled image container plus the resampling primitives shared by
rendering and augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from PIL import Image

MIN_SIDE = 8


@dataclass(frozen=True, eq=False)
class LabeledImage:
    """An RGB uint8 pixel buffer with its text label.

    ``provenance`` records how the sample was produced (seed, font,
    distortion parameters, applied augmentation ops) so that parameter
    ranges can be audited per sample.
    """

    pixels: np.ndarray
    label: str
    provenance: Mapping[str, Any] = field(default_factory=dict)
    unreadable: bool = False

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8 or px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must be HxWx3 uint8, got {px.dtype} {px.shape}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[:2]}")
        if not self.label and not self.unreadable:
            raise ValueError("label must be non-empty unless the sample is marked unreadable")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def evolve(self, pixels: np.ndarray | None = None, label: str | None = None,
               op: Mapping[str, Any] | None = None) -> "LabeledImage":
        """Copy with new pixels/label; ``op`` is appended to provenance["ops"]."""
        prov = dict(self.provenance)
        if op is not None:
            prov["ops"] = tuple(prov.get("ops", ())) + (dict(op),)
        return LabeledImage(
            self.pixels if pixels is None else pixels,
            self.label if label is None else label,
            prov,
            self.unreadable,
        )

    def same_pixels(self, other: "LabeledImage") -> bool:
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)


def to_uint8(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def affine_sample(
    src: np.ndarray,
    inverse: np.ndarray,
    out_shape: tuple[int, int],
    fill: Sequence[float] | None = None,
) -> np.ndarray:
    """Bilinear inverse-mapped resampling.

    ``inverse`` is a 2x3 matrix taking output (x, y) pixel coordinates to
    source coordinates. ``fill=None`` replicates the nearest edge pixel;
    otherwise samples outside the source take the constant ``fill`` colour.
    Returns float64 so callers can decide on rounding.
    """
    h, w = src.shape[:2]
    ho, wo = out_shape
    ys, xs = np.mgrid[0:ho, 0:wo].astype(np.float64)
    sx = inverse[0, 0] * xs + inverse[0, 1] * ys + inverse[0, 2]
    sy = inverse[1, 0] * xs + inverse[1, 1] * ys + inverse[1, 2]
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    srcf = src.astype(np.float64)
    fill_arr = None if fill is None else np.asarray(fill, dtype=np.float64)

    def tap(yy, xx):
        if fill_arr is None:
            return srcf[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = srcf[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(inside[..., None], vals, fill_arr)

    top = tap(y0, x0) * (1 - fx) + tap(y0, x0 + 1) * fx
    bottom = tap(y0 + 1, x0) * (1 - fx) + tap(y0 + 1, x0 + 1) * fx
    return top * (1 - fy) + bottom * fy


def rotate_expand(src: np.ndarray, degrees: float, fill: Sequence[float]) -> np.ndarray:
    """Rotate counter-clockwise about the centre, growing the canvas so no
    source pixel is cropped."""
    if degrees == 0:
        return src.copy()
    h, w = src.shape[:2]
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    wo = int(math.ceil(abs(w * c) + abs(h * s) - 1e-9))
    ho = int(math.ceil(abs(w * s) + abs(h * c) - 1e-9))
    cx, cy = (w - 1) / 2, (h - 1) / 2
    ocx, ocy = (wo - 1) / 2, (ho - 1) / 2
    # inverse of a visual counter-clockwise rotation in y-down coordinates
    inv = np.array([
        [c, -s, cx - c * ocx + s * ocy],
        [s, c, cy - s * ocx - c * ocy],
    ])
    return to_uint8(affine_sample(src, inv, (ho, wo), fill))


def resize(src: np.ndarray, width: int, height: int) -> np.ndarray:
    if (height, width) == src.shape[:2]:
        return src.copy()
    return np.asarray(Image.fromarray(src).resize((width, height), Image.BILINEAR))


def save_png(pixels: np.ndarray, path: str | Path) -> None:
    Image.fromarray(pixels).save(path, format="PNG")


def save_jpeg(pixels: np.ndarray, path: str | Path, quality: int = 75) -> None:
    Image.fromarray(pixels).save(path, format="JPEG", quality=quality)


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()
