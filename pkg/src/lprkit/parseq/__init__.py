"""Permuted autoregressive decoding at desk scale: vocabulary, decoding
orders, attention masks, AR/NAR/cloze decoding and ViT shape arithmetic."""

from .decoding import (
    DecodeResult,
    Recognizer,
    Step,
    cloze_distributions,
    decode_ar,
    decode_ensemble,
    decode_nar,
    query,
    refine_cloze,
)
from .masks import (
    AttentionMask,
    Permutation,
    causal_mask,
    cloze_mask,
    gen_permutations,
    mask_from_permutation,
    visible_context,
)
from .mock import ANY, MockRecognizer, context_free_mock, make_mock_recognizer
from .tokens import T_MAX, TokenSeq, Vocab, canonicalize
from .vit import ViTShape, count_params, param_breakdown, patch_grid

__all__ = [
    "ANY",
    "AttentionMask",
    "DecodeResult",
    "MockRecognizer",
    "Permutation",
    "Recognizer",
    "Step",
    "T_MAX",
    "TokenSeq",
    "ViTShape",
    "Vocab",
    "canonicalize",
    "causal_mask",
    "cloze_distributions",
    "cloze_mask",
    "context_free_mock",
    "count_params",
    "decode_ar",
    "decode_ensemble",
    "decode_nar",
    "gen_permutations",
    "make_mock_recognizer",
    "mask_from_permutation",
    "param_breakdown",
    "patch_grid",
    "query",
    "refine_cloze",
    "visible_context",
]
