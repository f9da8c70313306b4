import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lprkit.augment import (
    PHOTOMETRIC_OPS,
    AugmentConfig,
    apply_pipeline,
    blur_array,
    gaussian_blur,
    gaussian_kernel1d,
    geometric_transform,
    photometric,
    poisson_noise,
    posterize,
    randaugment_lite,
    vconcat,
)
from lprkit.errors import ConfigError, ParameterOutOfRange
from lprkit.image import LabeledImage

from conftest import make_image


def ink_centroid(px):
    ink = px[..., 0].astype(np.float64)
    ys, xs = np.mgrid[0:ink.shape[0], 0:ink.shape[1]]
    return (xs * ink).sum() / ink.sum(), (ys * ink).sum() / ink.sum()


# geometric

def test_geometric_identity(random_image):
    out = geometric_transform(random_image, (0.0, 0.0), 0.0, (0.0, 0.0))
    assert out.same_pixels(random_image)
    assert out.label == random_image.label


def test_rotation_round_trip():
    px = np.zeros((64, 64, 3), dtype=np.uint8)
    px[20:44, 16:48] = 200
    px[28:36, 24:40] = 60
    img = LabeledImage(px, "A")
    back = geometric_transform(geometric_transform(img, rotation=30.0), rotation=-30.0)
    crop = slice(16, 48)
    mad = np.abs(back.pixels[crop, crop].astype(int) - px[crop, crop].astype(int)).mean()
    assert mad < 10


def test_translation_moves_centroid():
    h, w = 40, 100
    px = np.zeros((h, w, 3), dtype=np.uint8)
    px[15:25, 40:50] = 255
    img = LabeledImage(px, "A")
    cx0, cy0 = ink_centroid(px)
    out = geometric_transform(img, translation=(0.1, 0.0))
    cx1, cy1 = ink_centroid(out.pixels)
    assert abs((cx1 - cx0) - 0.1 * w) <= 1
    assert abs(cy1 - cy0) < 1e-9


def test_geometric_out_of_range(random_image):
    with pytest.raises(ParameterOutOfRange):
        geometric_transform(random_image, shear=(0.95, 0.0))
    with pytest.raises(ParameterOutOfRange):
        geometric_transform(random_image, rotation=31)
    with pytest.raises(ParameterOutOfRange):
        geometric_transform(random_image, translation=(0.0, 0.31))


def test_geometric_keeps_size(random_image):
    out = geometric_transform(random_image, (0.9, -0.2), -30, (-0.1, 0.3))
    assert out.pixels.shape == random_image.pixels.shape


# noise

def test_poisson_zero_identity(random_image):
    assert poisson_noise(random_image, 0, np.random.default_rng(0)).same_pixels(random_image)


def test_poisson_mean_shift():
    img = make_image(200, 200, value=128)
    out = poisson_noise(img, 40, np.random.default_rng(1))
    shift = out.pixels.astype(np.float64).mean() - 128
    assert abs(shift - 40) <= 2


def test_poisson_clamps():
    img = make_image(16, 16, value=250)
    assert poisson_noise(img, 40, np.random.default_rng(2)).pixels.max() <= 255


def test_poisson_rejects_off_grid(random_image):
    with pytest.raises(ParameterOutOfRange):
        poisson_noise(random_image, 7, np.random.default_rng(0))


# blur

def test_blur_radius_zero(random_image):
    assert gaussian_blur(random_image, 0).same_pixels(random_image)


@pytest.mark.parametrize("radius", [1, 2, 3, 4])
def test_blur_constant_image(radius):
    img = make_image(value=173)
    assert gaussian_blur(img, radius).same_pixels(img)


@pytest.mark.parametrize("radius", [1, 2, 3, 4])
def test_blur_impulse_mass(radius):
    arr = np.zeros((41, 41))
    arr[20, 20] = 1.0
    assert abs(blur_array(arr, radius).sum() - 1.0) < 1e-6
    k = gaussian_kernel1d(radius)
    assert len(k) == 4 * radius + 1
    assert abs(k.sum() - 1.0) < 1e-12


def test_blur_rejects_radius():
    with pytest.raises(ParameterOutOfRange):
        gaussian_blur(make_image(), 5)


# vconcat

def test_vconcat_label_and_height():
    a = make_image(32, 64, "GJ01AB1234")
    b = make_image(48, 64, "MH12CD5678")
    out = vconcat(a, b)
    assert out.label == "GJ01AB1234MH12CD5678"
    assert out.pixels.shape == (80, 64, 3)


def test_vconcat_aspect_resize():
    a = make_image(32, 128, "A")
    b = make_image(20, 64, "B")
    out = vconcat(a, b)
    assert out.pixels.shape == (32 + 2 * 20, 128, 3)
    np.testing.assert_array_equal(out.pixels[:32], a.pixels)


# photometric

@pytest.mark.parametrize("op", ["brightness", "contrast", "sharpness"])
def test_zero_magnitude_identity(random_image, op):
    np.testing.assert_array_equal(photometric(op, random_image.pixels, 0.0), random_image.pixels)


def test_posterize_full_depth(random_image):
    np.testing.assert_array_equal(posterize(random_image.pixels, 8), random_image.pixels)
    np.testing.assert_array_equal(photometric("posterize", random_image.pixels, 0.0), random_image.pixels)


def test_randaugment_deterministic(random_image):
    a = randaugment_lite(random_image, np.random.default_rng(5))
    b = randaugment_lite(random_image, np.random.default_rng(5))
    assert a.same_pixels(b)
    assert a.label == random_image.label
    ops = a.provenance["ops"]
    assert len(ops) == 2 and all(o["op"] in PHOTOMETRIC_OPS for o in ops)


# pipeline

def peer(rng):
    return make_image(24, 48, "KA05ZZ0001", seed=int(rng.integers(1000)))


def test_pipeline_identity_config(random_image):
    out = apply_pipeline(random_image, AugmentConfig.identity(), np.random.default_rng(0), peer)
    assert out.same_pixels(random_image)


def test_pipeline_deterministic(random_image):
    cfg = AugmentConfig(concat_enabled=True)
    a = apply_pipeline(random_image, cfg, np.random.default_rng(8), peer, is_plate=False)
    b = apply_pipeline(random_image, cfg, np.random.default_rng(8), peer, is_plate=False)
    assert a.same_pixels(b) and a.label == b.label


def test_pipeline_params_within_ranges(random_image):
    cfg = AugmentConfig()
    rng = np.random.default_rng(3)
    for _ in range(200):
        out = apply_pipeline(random_image, cfg, rng, peer)
        ops = {o["op"]: o for o in out.provenance["ops"]}
        g = ops["geometric"]
        assert abs(g["shear_x"]) <= 0.9 and abs(g["shear_y"]) <= 0.2
        assert abs(g["rotation"]) <= 30
        assert abs(g["translate_x"]) <= 0.1 and abs(g["translate_y"]) <= 0.3
        assert ops["poisson"]["lambda"] in range(0, 41, 5)
        assert ops["blur"]["radius"] in range(5)
        assert out.label == random_image.label


def test_pipeline_concat_gating(random_image):
    rng = np.random.default_rng(4)
    cfg = AugmentConfig.identity()
    n = 10_000
    assert not any(apply_pipeline(random_image, cfg, rng, peer, is_plate=False).label != random_image.label
                   for _ in range(n))


def test_pipeline_concat_frequency():
    small = make_image(8, 16, "AB")
    cfg = AugmentConfig(0, 0, 0, 0, 0, (0,), (0,), concat_enabled=True, randaugment_ops=())
    rng = np.random.default_rng(12)
    n = 10_000
    hits = sum(apply_pipeline(small, cfg, rng, peer, is_plate=False).label != "AB" for _ in range(n))
    assert 0.47 <= hits / n <= 0.53


def test_concat_skipped_for_plates():
    cfg = AugmentConfig(0, 0, 0, 0, 0, (0,), (0,), concat_enabled=True, concat_probability=1.0,
                        randaugment_ops=())
    img = make_image(label="GJ01AB1234")
    assert apply_pipeline(img, cfg, np.random.default_rng(0), peer, is_plate=True).label == "GJ01AB1234"
    assert apply_pipeline(img, cfg, np.random.default_rng(0), peer, is_plate=False).label != "GJ01AB1234"


def test_config_validation_and_flat_round_trip():
    with pytest.raises(ConfigError):
        AugmentConfig(shear_x=1.0)
    with pytest.raises(ConfigError):
        AugmentConfig(poisson_lambda_set=(3,))
    with pytest.raises(ConfigError):
        AugmentConfig.from_flat({"bogus": "1"})
    cfg = AugmentConfig(rotation=12.5, concat_enabled=True, blur_radius_set=(0, 2))
    assert AugmentConfig.from_flat(cfg.to_flat()) == cfg


@settings(max_examples=50, deadline=None)
@given(st.text("ABC0123", min_size=1, max_size=8), st.text("XYZ789", min_size=1, max_size=8))
def test_vconcat_label_property(la, lb):
    assert vconcat(make_image(label=la), make_image(16, 32, label=lb)).label == la + lb
