import math

import numpy as np
import pytest

from lprkit.errors import GlyphMissing
from lprkit.glyphs import CHARSET, BitmapGlyphs, check_coverage
from lprkit.image import LabeledImage
from lprkit.plate_grammar import BreakPosition, default_registry, layout_from_breaks, parse_plate
from lprkit.synth_render import (
    WARP_MODES,
    compose_text,
    generate_batch,
    generate_sample,
    render_plate,
    warp_image,
)

IDENTITY = {"blur_radius": 0, "rotation": 0.0, "warp_mode": "none"}


@pytest.fixture
def layout():
    return layout_from_breaks(parse_plate("GJ01AB1234"), {BreakPosition.AFTER_DISTRICT})


def test_builtin_font_covers_charset():
    g = BitmapGlyphs()
    check_coverage(g)
    for ch in CHARSET:
        assert g.rasterize(ch, 16).shape[0] == 16


def test_missing_glyph():
    with pytest.raises(GlyphMissing):
        BitmapGlyphs().rasterize("#", 16)


def test_undistorted_baseline(layout):
    img = render_plate(layout, BitmapGlyphs(), np.random.default_rng(3), overrides=IDENTITY)
    assert img.label == "GJ01AB1234"
    bg = np.array(img.provenance["background"])
    ink = np.abs(img.pixels.astype(int) - bg).sum(axis=2) > 60
    assert ink.sum() > 0
    # two rows of text => two separate horizontal ink bands
    rows = ink.any(axis=1)
    bands = np.sum(rows[1:] & ~rows[:-1]) + rows[0]
    assert bands == 2


def test_render_deterministic(layout):
    a = render_plate(layout, BitmapGlyphs(), np.random.default_rng(42))
    b = render_plate(layout, BitmapGlyphs(), np.random.default_rng(42))
    assert a.same_pixels(b)
    assert a.provenance == b.provenance


def test_label_fidelity_under_distortion(layout):
    for seed in range(30):
        img = render_plate(layout, BitmapGlyphs(), np.random.default_rng(seed))
        assert img.label == "GJ01AB1234"
        p = img.provenance
        assert p["blur_radius"] in range(5)
        assert -90 <= p["rotation"] <= 90
        assert p["warp_mode"] in WARP_MODES


def test_rotation_90_keeps_all_ink(layout):
    glyphs = BitmapGlyphs()
    flat = render_plate(layout, glyphs, np.random.default_rng(0), overrides=IDENTITY)
    turned = render_plate(layout, glyphs, np.random.default_rng(0), overrides={**IDENTITY, "rotation": 90.0})
    assert turned.pixels.shape[:2] == flat.pixels.shape[1::-1]
    np.testing.assert_array_equal(np.rot90(flat.pixels), turned.pixels)


def test_warp_none_identity():
    img = LabeledImage(np.random.default_rng(0).integers(0, 256, (20, 40, 3), dtype=np.uint8), "X")
    assert warp_image(img, "none", 5, 10).same_pixels(img)


def test_warp_zero_amplitude():
    img = LabeledImage(np.random.default_rng(1).integers(0, 256, (20, 40, 3), dtype=np.uint8), "X")
    for mode in ("sine", "cosine"):
        assert warp_image(img, mode, 0, 17).same_pixels(img)


def test_warp_sine_displacement_samples():
    h, w, amp = 16, 64, 4
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[8] = 255  # a single horizontal line at row 8
    out = warp_image(LabeledImage(px, "X"), "sine", amp, w).pixels
    assert out.shape == (h + 2 * amp, w, 3)
    line_row = out[..., 0].argmax(axis=0)
    for x in range(w):
        expected = 8 + amp + round(amp * math.sin(2 * math.pi * x / w))
        assert line_row[x] == expected
    assert line_row[0] - (8 + amp) == 0
    assert line_row[w // 4] - (8 + amp) == 4


def test_warp_cosine_displacement():
    px = np.zeros((16, 32, 3), dtype=np.uint8)
    px[5] = 200
    out = warp_image(LabeledImage(px, "X"), "cosine", 3, 32).pixels
    assert out[..., 0].argmax(axis=0)[0] == 5 + 3 + 3


def test_compose_multiline_shape():
    g = BitmapGlyphs()
    one = compose_text(["GJ01AB1234"], g, 14, (230, 200, 0), (0, 0, 0))
    three = compose_text(["GJ", "01AB", "1234"], g, 14, (230, 200, 0), (0, 0, 0))
    assert three.shape[0] > one.shape[0]
    assert three.shape[1] < one.shape[1]


def test_batch_independent_of_workers():
    reg = default_registry()
    a = generate_batch(9, 12, reg, workers=1)
    b = generate_batch(9, 12, reg, workers=4)
    assert all(x.same_pixels(y) and x.label == y.label for x, y in zip(a, b))
    assert generate_sample(9, 5, reg).same_pixels(a[5])


def test_warp_mode_frequencies_small():
    # 3 sigma multinomial band on the sampled warp mode; full 10^4 run lives in the acceptance suite
    n = 1500
    counts = {m: 0 for m in WARP_MODES}
    reg = default_registry()
    for i in range(n):
        counts[generate_sample(77, i, reg).provenance["warp_mode"]] += 1
    sigma = math.sqrt((1 / 3) * (2 / 3) / n)
    for m in WARP_MODES:
        assert abs(counts[m] / n - 1 / 3) <= 3 * sigma
