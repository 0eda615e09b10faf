"""Transition-based aspect-opinion pair and sentiment-triplet extraction."""

from .core import (
    Action,
    Constituent,
    Direction,
    GoldTriplet,
    PairRelation,
    ParserState,
    Polarity,
    Sentence,
    Span,
    Token,
    TraceStep,
    make_sentence,
)
from .data import Corpus, build_fused, generate_synthetic, load_corpus, parse_aste_line
from .decode import decode, decode_corpus, evaluate, measure_complexity
from .errors import ShiftpairError
from .estimator import TransitionTripletExtractor
from .oracle import CoverageCounts, OracleResult, coverage, derive, get_action
from .scorer import Dims, ScorerParams, Vocabulary, init_params
from .training import LossWeights, TrainConfig, finite_diff_check, train
from .transition import apply, initial_state, is_terminal, legal_actions, run_with_policy

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Constituent",
    "Corpus",
    "CoverageCounts",
    "Dims",
    "Direction",
    "GoldTriplet",
    "LossWeights",
    "OracleResult",
    "PairRelation",
    "ParserState",
    "Polarity",
    "ScorerParams",
    "Sentence",
    "ShiftpairError",
    "Span",
    "Token",
    "TraceStep",
    "TrainConfig",
    "TransitionTripletExtractor",
    "Vocabulary",
    "apply",
    "build_fused",
    "coverage",
    "decode",
    "decode_corpus",
    "derive",
    "evaluate",
    "finite_diff_check",
    "generate_synthetic",
    "get_action",
    "init_params",
    "initial_state",
    "is_terminal",
    "legal_actions",
    "load_corpus",
    "make_sentence",
    "measure_complexity",
    "parse_aste_line",
    "run_with_policy",
    "train",
]
