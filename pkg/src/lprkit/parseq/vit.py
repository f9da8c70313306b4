"""Patch-grid and parameter-count arithmetic for the ViT encoder plus
permutation-language-model decoder."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import IndivisibleShape
from .tokens import T_MAX


@dataclass(frozen=True)
class ViTShape:
    img_h: int
    img_w: int
    patch_h: int
    patch_w: int
    embed_dim: int = 384
    depth: int = 12
    heads: int = 6
    mlp_ratio: float = 4.0
    decoder_depth: int = 1
    channels: int = 3
    max_label_length: int = T_MAX

    def __post_init__(self):
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")


def patch_grid(s: ViTShape) -> tuple[int, int, int]:
    if s.img_h % s.patch_h or s.img_w % s.patch_w:
        raise IndivisibleShape(f"{s.img_h}x{s.img_w} is not tiled by {s.patch_h}x{s.patch_w} patches")
    rows, cols = s.img_h // s.patch_h, s.img_w // s.patch_w
    return rows, cols, rows * cols


def _linear(n_in: int, n_out: int) -> int:
    return n_in * n_out + n_out


def _norm(d: int) -> int:
    return 2 * d


def encoder_block_params(d: int, mlp_ratio: float) -> int:
    hidden = int(d * mlp_ratio)
    attn = _linear(d, 3 * d) + _linear(d, d)
    mlp = _linear(d, hidden) + _linear(hidden, d)
    return attn + mlp + 2 * _norm(d)


def decoder_block_params(d: int, mlp_ratio: float) -> int:
    # self-attention over the queries/context, cross-attention to the image
    hidden = int(d * mlp_ratio)
    attn = 2 * (_linear(d, 3 * d) + _linear(d, d))
    mlp = _linear(d, hidden) + _linear(hidden, d)
    return attn + mlp + 4 * _norm(d)


def param_breakdown(s: ViTShape, vocab_size: int) -> dict[str, int]:
    """Parameter count per component; ``count_params`` is the sum."""
    _, _, tokens = patch_grid(s)
    d = s.embed_dim
    out = {
        "patch_embed": _linear(s.channels * s.patch_h * s.patch_w, d),
        "pos_embed": tokens * d,
        "encoder_blocks": s.depth * encoder_block_params(d, s.mlp_ratio),
        "encoder_norm": _norm(d),
    }
    if s.decoder_depth > 0:
        out["token_embed"] = vocab_size * d
        out["query_pos_embed"] = (s.max_label_length + 1) * d
        out["decoder_blocks"] = s.decoder_depth * decoder_block_params(d, s.mlp_ratio)
        out["decoder_norm"] = _norm(d)
    out["head"] = _linear(d, vocab_size)
    return out


def count_params(s: ViTShape, vocab_size: int) -> int:
    return sum(param_breakdown(s, vocab_size).values())
