"""Synthetic plate rendering.

Dark text is drawn line by line on a yellow plate, then distorted with a
sine/cosine column warp, a rotation of up to 90 degrees either way (canvas
grows, nothing is cropped) and a Gaussian blur of radius 0 to 4.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .augment import blur_array
from .glyphs import BitmapGlyphs, GlyphSource
from .image import LabeledImage, rotate_expand, to_uint8
from .plate_grammar import PlateLayout, canonical_text, layout_plate, sample_plate

WARP_MODES = ("none", "sine", "cosine")
BLUR_RADII = (0, 1, 2, 3, 4)
ROTATION_RANGE = (-90.0, 90.0)
GLYPH_HEIGHT_RANGE = (12, 24)
BACKGROUND = (230, 200, 0)
BACKGROUND_JITTER = 0.10
INK_MAX = 40


@dataclass(frozen=True)
class RenderParams:
    glyph_height: int
    background: tuple[int, int, int]
    ink: tuple[int, int, int]
    blur_radius: int
    rotation: float
    warp_mode: str
    warp_amplitude: int = 0
    warp_period: int = 1


def _sample_base_params(rng: np.random.Generator) -> RenderParams:
    glyph_height = int(rng.integers(GLYPH_HEIGHT_RANGE[0], GLYPH_HEIGHT_RANGE[1] + 1))
    jitter = rng.uniform(-BACKGROUND_JITTER, BACKGROUND_JITTER, size=3)
    background = tuple(int(v) for v in np.clip(np.rint(np.array(BACKGROUND) * (1 + jitter)), 0, 255))
    ink = tuple(int(v) for v in rng.integers(0, INK_MAX + 1, size=3))
    blur_radius = int(rng.choice(BLUR_RADII))
    rotation = float(rng.uniform(*ROTATION_RANGE))
    warp_mode = WARP_MODES[int(rng.integers(len(WARP_MODES)))]
    return RenderParams(glyph_height, background, ink, blur_radius, rotation, warp_mode)


def compose_text(lines: Sequence[str], glyphs: GlyphSource, glyph_height: int,
                 background: Sequence[int], ink: Sequence[int]) -> np.ndarray:
    """Draw each line centred on its own row of a plain plate canvas."""
    spacing = max(1, glyph_height // 7)
    margin = max(4, glyph_height // 2)
    line_gap = max(2, glyph_height // 3)
    bitmaps = [[glyphs.rasterize(ch, glyph_height) for ch in line] for line in lines]
    widths = [sum(b.shape[1] for b in row) + spacing * (len(row) - 1) for row in bitmaps]
    width = max(widths) + 2 * margin
    height = len(lines) * glyph_height + (len(lines) - 1) * line_gap + 2 * margin
    alpha = np.zeros((height, width), dtype=np.float64)
    y = margin
    for row, row_w in zip(bitmaps, widths):
        x = margin + (max(widths) - row_w) // 2
        for b in row:
            alpha[y:y + glyph_height, x:x + b.shape[1]] = np.maximum(
                alpha[y:y + glyph_height, x:x + b.shape[1]], b)
            x += b.shape[1] + spacing
        y += glyph_height + line_gap
    a = alpha[..., None]
    out = np.asarray(background, dtype=np.float64) * (1 - a) + np.asarray(ink, dtype=np.float64) * a
    return to_uint8(out)


def warp_displacement(mode: str, amplitude: float, period: float, width: int) -> np.ndarray:
    """Integer vertical shift of each column for the given warp."""
    x = np.arange(width, dtype=np.float64)
    if mode == "none":
        return np.zeros(width, dtype=np.int64)
    fn = {"sine": np.sin, "cosine": np.cos}[mode]
    return np.rint(amplitude * fn(2 * np.pi * x / period)).astype(np.int64)


def warp_image(img: LabeledImage, mode: str, amplitude: int, period: float,
               fill: Sequence[int] | None = None) -> LabeledImage:
    """Shift each pixel column vertically by ``amplitude * f(2*pi*x/period)``.

    The canvas gains ``amplitude`` rows of padding above and below, filled
    with ``fill`` (default: the top-left pixel colour). ``mode="none"``
    returns the image unchanged.
    """
    if mode not in WARP_MODES:
        raise ValueError(f"unknown warp mode {mode!r}")
    if amplitude < 0 or period <= 0:
        raise ValueError("amplitude must be >= 0 and period > 0")
    if mode == "none":
        return img.evolve(op={"op": "warp", "mode": "none"})
    src = img.pixels
    h, w = src.shape[:2]
    amplitude = int(amplitude)
    color = src[0, 0] if fill is None else np.asarray(fill, dtype=np.uint8)
    out = np.empty((h + 2 * amplitude, w, 3), dtype=np.uint8)
    out[:] = color
    shift = warp_displacement(mode, amplitude, period, w)
    for x in range(w):
        top = amplitude + shift[x]
        out[top:top + h, x] = src[:, x]
    return img.evolve(pixels=out, op={"op": "warp", "mode": mode, "amplitude": amplitude, "period": period})


def render_plate(layout: PlateLayout, glyphs: GlyphSource, rng: np.random.Generator,
                 overrides: Mapping[str, object] | None = None,
                 seed: int | None = None, **extra_provenance) -> LabeledImage:
    """Render ``layout`` with randomly drawn distortions.

    ``overrides`` replaces drawn parameters by name (see :class:`RenderParams`)
    after all draws are made, so the stream consumption does not change.
    """
    params = _sample_base_params(rng)
    canvas = compose_text(layout.lines, glyphs, params.glyph_height, params.background, params.ink)
    h, w = canvas.shape[:2]
    amplitude = int(rng.integers(1, max(1, h // 8) + 1))
    period = int(rng.integers(max(1, w // 2), 2 * w + 1))
    params = replace(params, warp_amplitude=amplitude, warp_period=period)
    if overrides:
        params = replace(params, **overrides)
    if params.warp_mode == "none":
        params = replace(params, warp_amplitude=0, warp_period=1)
    if overrides and {"glyph_height", "background", "ink"} & set(overrides):
        canvas = None
    return render_with_params(layout, glyphs, params, canvas=canvas, seed=seed, **extra_provenance)


def render_with_params(layout: PlateLayout, glyphs: GlyphSource, params: RenderParams,
                       canvas: np.ndarray | None = None, seed: int | None = None,
                       **extra_provenance) -> LabeledImage:
    if canvas is None:
        canvas = compose_text(layout.lines, glyphs, params.glyph_height, params.background, params.ink)
    prov = {"seed": seed, "font": glyphs.id, "lines": list(layout.lines), **asdict(params)}
    prov["background"] = list(params.background)
    prov["ink"] = list(params.ink)
    prov.update(extra_provenance)
    img = LabeledImage(canvas, canonical_text(layout), prov)
    img = warp_image(img, params.warp_mode, params.warp_amplitude, params.warp_period,
                     fill=params.background)
    px = rotate_expand(img.pixels, params.rotation, fill=params.background)
    if params.blur_radius:
        px = to_uint8(blur_array(px.astype(np.float64), params.blur_radius))
    return LabeledImage(px, img.label, prov)


def sample_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent per-sample stream derived from (master seed, index)."""
    return np.random.default_rng([int(master_seed), int(index)])


def generate_sample(master_seed: int, index: int, registry: Mapping[str, float],
                    fonts: Sequence[GlyphSource] | None = None) -> LabeledImage:
    fonts = list(fonts) if fonts else [BitmapGlyphs()]
    rng = sample_stream(master_seed, index)
    fields = sample_plate(rng, registry)
    layout = layout_plate(fields, rng)
    font = fonts[int(rng.integers(len(fonts)))]
    return render_plate(layout, font, rng, seed=master_seed, index=index)


def generate_batch(master_seed: int, count: int, registry: Mapping[str, float],
                   fonts: Sequence[GlyphSource] | None = None, workers: int = 1) -> list[LabeledImage]:
    """Generate ``count`` samples; output does not depend on ``workers``."""
    def one(i):
        return generate_sample(master_seed, i, registry, fonts)

    if workers <= 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(count)))


def expected_multiline_fraction() -> float:
    """Probability that a sampled plate is laid out over more than one line."""
    from .plate_grammar import EXTRA_BREAK_PROB, PRIMARY_BREAK_PROB, SERIES_LENGTH_PROBS

    p_empty = SERIES_LENGTH_PROBS[0]
    keep = 1 - PRIMARY_BREAK_PROB
    return p_empty * (1 - keep * (1 - EXTRA_BREAK_PROB)) + (1 - p_empty) * (1 - keep * (1 - EXTRA_BREAK_PROB) ** 3)


__all__ = [
    "RenderParams",
    "WARP_MODES",
    "compose_text",
    "expected_multiline_fraction",
    "generate_batch",
    "generate_sample",
    "render_plate",
    "render_with_params",
    "sample_stream",
    "warp_displacement",
    "warp_image",
]
