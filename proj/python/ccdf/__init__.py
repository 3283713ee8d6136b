"""Counterfactual causal debiasing for toxic language detection."""

from ._ccdf import (
    Lexicon,
    TrainConfig,
    TrainedModel,
    TrainResult,
    argmax,
    effects,
    fuse,
    fuse2,
    generate_corpus,
    load_jsonl,
    run_cli,
    token_toxic_ratio,
    tokenize,
    train,
)

__all__ = [
    "Lexicon",
    "TrainConfig",
    "TrainedModel",
    "TrainResult",
    "argmax",
    "effects",
    "fuse",
    "fuse2",
    "generate_corpus",
    "load_jsonl",
    "run_cli",
    "token_toxic_ratio",
    "tokenize",
    "train",
]
