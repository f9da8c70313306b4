"""Training-time augmentation.

Geometric (shear, rotation, translation), additive Poisson noise, Gaussian
blur, a reduced photometric RandAugment, and vertical concatenation of two
samples whose labels are joined.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Mapping, Sequence

import numpy as np
from PIL import Image, ImageOps

from .errors import ConfigError, ParameterOutOfRange
from .image import LabeledImage, affine_sample, resize, to_uint8

MAX_SHEAR = (0.9, 0.2)
MAX_ROTATION = 30.0
MAX_TRANSLATE = (0.1, 0.3)
POISSON_LAMBDAS = tuple(range(0, 41, 5))
BLUR_RADII_ALLOWED = (0, 1, 2, 3, 4)
PHOTOMETRIC_OPS = ("brightness", "contrast", "sharpness", "posterize", "equalize")
_EPS = 1e-12


@dataclass(frozen=True)
class AugmentConfig:
    """Augmentation ranges. Magnitudes are symmetric bounds (``+-value``).

    Defaults reproduce the recognition training recipe. Any bound may be
    lowered (down to 0 for an identity op) but never raised above it.
    """

    shear_x: float = MAX_SHEAR[0]
    shear_y: float = MAX_SHEAR[1]
    rotation: float = MAX_ROTATION
    translate_x: float = MAX_TRANSLATE[0]
    translate_y: float = MAX_TRANSLATE[1]
    poisson_lambda_set: tuple[int, ...] = POISSON_LAMBDAS
    blur_radius_set: tuple[int, ...] = BLUR_RADII_ALLOWED
    concat_probability: float = 0.5
    # concatenation is a pretraining-only trick, and only for non-plate text
    concat_enabled: bool = False
    concat_on_plates: bool = False
    randaugment_ops: tuple[str, ...] = PHOTOMETRIC_OPS
    randaugment_n: int = 2
    randaugment_magnitude: float = 10.0

    def __post_init__(self):
        for name, limit in (("shear_x", MAX_SHEAR[0]), ("shear_y", MAX_SHEAR[1]),
                            ("rotation", MAX_ROTATION), ("translate_x", MAX_TRANSLATE[0]),
                            ("translate_y", MAX_TRANSLATE[1])):
            v = getattr(self, name)
            if not 0 <= v <= limit:
                raise ConfigError(name, f"must lie in [0, {limit}], got {v}")
        if not self.poisson_lambda_set or not set(self.poisson_lambda_set) <= set(POISSON_LAMBDAS):
            raise ConfigError("poisson_lambda_set", f"must be a non-empty subset of {POISSON_LAMBDAS}")
        if not self.blur_radius_set or not set(self.blur_radius_set) <= set(BLUR_RADII_ALLOWED):
            raise ConfigError("blur_radius_set", f"must be a non-empty subset of {BLUR_RADII_ALLOWED}")
        if not 0 <= self.concat_probability <= 1:
            raise ConfigError("concat_probability", "must lie in [0, 1]")
        unknown = set(self.randaugment_ops) - set(PHOTOMETRIC_OPS)
        if unknown:
            raise ConfigError("randaugment_ops", f"unknown ops {sorted(unknown)}")
        if self.randaugment_n < 0:
            raise ConfigError("randaugment_n", "must be >= 0")
        if not 0 <= self.randaugment_magnitude <= 10:
            raise ConfigError("randaugment_magnitude", "must lie in [0, 10]")

    @classmethod
    def identity(cls) -> "AugmentConfig":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, (0,), (0,), randaugment_ops=(), randaugment_n=0)

    def to_flat(self) -> dict[str, str]:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, (tuple, list)):
                out[k] = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                out[k] = "true" if v else "false"
            else:
                out[k] = repr(v) if isinstance(v, float) else str(v)
        return out

    @classmethod
    def from_flat(cls, values: Mapping[str, str]) -> "AugmentConfig":
        """Build from ``key = value`` strings; unknown keys are rejected."""
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ConfigError(key, "unknown augmentation key")
            kind = str(kinds[key])
            raw = str(raw).strip()
            try:
                if kind == "bool":
                    if raw.lower() not in {"true", "false", "1", "0", "yes", "no"}:
                        raise ValueError(raw)
                    kwargs[key] = raw.lower() in {"true", "1", "yes"}
                elif kind == "float":
                    kwargs[key] = float(raw)
                elif kind == "int":
                    kwargs[key] = int(raw)
                elif "str" in kind:
                    kwargs[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
                else:
                    kwargs[key] = tuple(int(s) for s in raw.split(",") if s.strip())
            except ValueError:
                raise ConfigError(key, f"cannot parse {raw!r}") from None
        return cls(**kwargs)


def _check(name: str, value: float, bound: float) -> None:
    if abs(value) > bound + _EPS:
        raise ParameterOutOfRange(f"{name}={value} outside +-{bound}")


def geometric_transform(img: LabeledImage, shear: tuple[float, float] = (0.0, 0.0),
                        rotation: float = 0.0,
                        translation: tuple[float, float] = (0.0, 0.0)) -> LabeledImage:
    """Shear, rotate and translate about the image centre, edge-replicated.

    ``shear`` are shear factors (x' = x + sx*y, y' = y + sy*x); ``rotation``
    is in degrees, counter-clockwise; ``translation`` is a fraction of the
    image width/height. Output has the input's size.
    """
    sx, sy = shear
    tx, ty = translation
    _check("shear_x", sx, MAX_SHEAR[0])
    _check("shear_y", sy, MAX_SHEAR[1])
    _check("rotation", rotation, MAX_ROTATION)
    _check("translate_x", tx, MAX_TRANSLATE[0])
    _check("translate_y", ty, MAX_TRANSLATE[1])
    h, w = img.pixels.shape[:2]
    t = math.radians(rotation)
    c, s = math.cos(t), math.sin(t)
    det = 1.0 - sx * sy
    shear_inv = np.array([[1.0, -sx], [-sy, 1.0]]) / det
    rot_inv = np.array([[c, -s], [s, c]])
    a_inv = shear_inv @ rot_inv
    center = np.array([(w - 1) / 2, (h - 1) / 2])
    shift = center + np.array([tx * w, ty * h])
    inverse = np.hstack([a_inv, (center - a_inv @ shift)[:, None]])
    out = to_uint8(affine_sample(img.pixels, inverse, (h, w)))
    op = {"op": "geometric", "shear_x": sx, "shear_y": sy, "rotation": rotation,
          "translate_x": tx, "translate_y": ty}
    return img.evolve(pixels=out, op=op)


def poisson_noise(img: LabeledImage, lam: int, rng: np.random.Generator) -> LabeledImage:
    """Add un-centred Poisson(lam) noise to every channel value, clamped."""
    if lam not in POISSON_LAMBDAS:
        raise ParameterOutOfRange(f"lambda {lam} not in {POISSON_LAMBDAS}")
    if lam == 0:
        return img.evolve(op={"op": "poisson", "lambda": 0})
    noise = rng.poisson(lam, size=img.pixels.shape)
    out = np.clip(img.pixels.astype(np.int64) + noise, 0, 255).astype(np.uint8)
    return img.evolve(pixels=out, op={"op": "poisson", "lambda": int(lam)})


def gaussian_kernel1d(radius: int) -> np.ndarray:
    """Normalized kernel with sigma = radius/2 and half-width 2*radius."""
    if radius == 0:
        return np.ones(1)
    sigma = radius / 2
    x = np.arange(-2 * radius, 2 * radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def blur_array(arr: np.ndarray, radius: int) -> np.ndarray:
    """Separable Gaussian blur of a float HxW[xC] array, edge-padded."""
    if radius == 0:
        return arr.copy()
    k = gaussian_kernel1d(radius)
    half = len(k) // 2
    out = arr.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0)] * out.ndim
        pad[axis] = (half, half)
        padded = np.pad(out, pad, mode="edge")
        n = out.shape[axis]
        acc = np.zeros_like(out)
        for i, wgt in enumerate(k):
            acc += wgt * np.take(padded, range(i, i + n), axis=axis)
        out = acc
    return out


def gaussian_blur(img: LabeledImage, radius: int) -> LabeledImage:
    if radius not in BLUR_RADII_ALLOWED:
        raise ParameterOutOfRange(f"blur radius {radius} not in {BLUR_RADII_ALLOWED}")
    if radius == 0:
        return img.evolve(op={"op": "blur", "radius": 0})
    out = to_uint8(blur_array(img.pixels.astype(np.float64), radius))
    return img.evolve(pixels=out, op={"op": "blur", "radius": int(radius)})


def vconcat(a: LabeledImage, b: LabeledImage) -> LabeledImage:
    """Stack ``b`` under ``a`` and join their labels.

    ``b`` is resized to ``a``'s width keeping its aspect ratio.
    """
    if not a.label or not b.label:
        raise ValueError("both images need a non-empty label to be concatenated")
    wa = a.width
    hb = max(1, round(b.height * wa / b.width))
    b_px = resize(b.pixels, wa, hb)
    out = np.concatenate([a.pixels, b_px], axis=0)
    return a.evolve(pixels=out, label=a.label + b.label,
                    op={"op": "vconcat", "peer_label": b.label, "peer_height": hb})


# photometric ops: magnitude in [0, 10]; sign flips enhance/degrade

def _blend(base: np.ndarray, px: np.ndarray, factor: float) -> np.ndarray:
    if factor == 1.0:
        return px.copy()
    return to_uint8(base + factor * (px.astype(np.float64) - base))


def _factor(magnitude: float, sign: int) -> float:
    return 1.0 + sign * 0.09 * magnitude


def photometric(name: str, px: np.ndarray, magnitude: float, sign: int = 1) -> np.ndarray:
    if name == "brightness":
        return _blend(np.zeros(px.shape), px, _factor(magnitude, sign))
    if name == "contrast":
        gray = px.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
        return _blend(np.full(px.shape, gray.mean()), px, _factor(magnitude, sign))
    if name == "sharpness":
        f = px.astype(np.float64)
        smooth = f.copy()
        kernel = np.array([[1, 1, 1], [1, 5, 1], [1, 1, 1]], dtype=np.float64) / 13
        h, w = px.shape[:2]
        if h > 2 and w > 2:
            acc = np.zeros_like(f[1:-1, 1:-1])
            for dy in range(3):
                for dx in range(3):
                    acc += kernel[dy, dx] * f[dy:dy + h - 2, dx:dx + w - 2]
            smooth[1:-1, 1:-1] = acc
        return _blend(smooth, px, _factor(magnitude, sign))
    if name == "posterize":
        bits = 8 - int(round(magnitude * 4 / 10))
        return posterize(px, bits)
    if name == "equalize":
        return np.asarray(ImageOps.equalize(Image.fromarray(px)))
    raise ValueError(f"unknown photometric op {name!r}")


def posterize(px: np.ndarray, bits: int) -> np.ndarray:
    if not 1 <= bits <= 8:
        raise ParameterOutOfRange(f"posterize bits {bits} outside 1..8")
    mask = np.uint8((0xFF << (8 - bits)) & 0xFF)
    return px & mask


def randaugment_lite(img: LabeledImage, rng: np.random.Generator,
                     ops: Sequence[str] = PHOTOMETRIC_OPS, n: int = 2,
                     max_magnitude: float = 10.0) -> LabeledImage:
    """Apply ``n`` photometric ops drawn with replacement at one shared
    magnitude M ~ U(0, max_magnitude)."""
    if not ops or n == 0:
        return img
    magnitude = float(rng.uniform(0, max_magnitude))
    chosen = [ops[i] for i in rng.integers(len(ops), size=n)]
    signs = [1 if s else -1 for s in rng.integers(2, size=n)]
    out = img
    for name, sign in zip(chosen, signs):
        px = photometric(name, out.pixels, magnitude, sign)
        out = out.evolve(pixels=px, op={"op": name, "magnitude": magnitude, "sign": sign})
    return out


PeerSampler = Callable[[np.random.Generator], LabeledImage]


def apply_pipeline(img: LabeledImage, cfg: AugmentConfig, rng: np.random.Generator,
                   peer_sampler: PeerSampler | None = None, is_plate: bool = True) -> LabeledImage:
    """Run the full augmentation chain on one sample.

    Order: optional vertical concatenation, geometric, Poisson noise, blur,
    photometric RandAugment. Concatenation is considered only when
    ``cfg.concat_enabled`` and (the sample is not a plate or
    ``cfg.concat_on_plates``).
    """
    if cfg.concat_enabled and (cfg.concat_on_plates or not is_plate):
        if rng.random() < cfg.concat_probability:
            if peer_sampler is None:
                raise ValueError("concatenation enabled but no peer_sampler given")
            img = vconcat(img, peer_sampler(rng))
    sx = float(rng.uniform(-cfg.shear_x, cfg.shear_x))
    sy = float(rng.uniform(-cfg.shear_y, cfg.shear_y))
    rot = float(rng.uniform(-cfg.rotation, cfg.rotation))
    tx = float(rng.uniform(-cfg.translate_x, cfg.translate_x))
    ty = float(rng.uniform(-cfg.translate_y, cfg.translate_y))
    img = geometric_transform(img, (sx, sy), rot, (tx, ty))
    lam = int(cfg.poisson_lambda_set[int(rng.integers(len(cfg.poisson_lambda_set)))])
    img = poisson_noise(img, lam, rng)
    radius = int(cfg.blur_radius_set[int(rng.integers(len(cfg.blur_radius_set)))])
    img = gaussian_blur(img, radius)
    return randaugment_lite(img, rng, cfg.randaugment_ops, cfg.randaugment_n, cfg.randaugment_magnitude)


__all__ = [
    "AugmentConfig",
    "PHOTOMETRIC_OPS",
    "apply_pipeline",
    "blur_array",
    "gaussian_blur",
    "gaussian_kernel1d",
    "geometric_transform",
    "photometric",
    "poisson_noise",
    "posterize",
    "randaugment_lite",
    "vconcat",
]
