"""Parameterized scoring of actions and sentiments from parser states.

A state is summarized as the concatenation of four blocks: a bidirectional
recurrent summary of the stack constituents, the same for the buffer
tokens, a forward recurrent summary of the action history (consumed as
one-hot action vectors), and a clamped-distance embedding for the top two
constituents. Softmax action scores are restricted to the legal set.

Token vectors come from a trainable lookup table, or from an external
per-token vector file produced offline (see vecfile).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import lstm
from .core import ParserState, Sentence
from .transition import legal_actions
from .errors import DimMismatchError, MissingVectorError

N_ACTIONS = 7
N_SENTIMENTS = 4
UNK = "<unk>"


@dataclass(frozen=True)
class Dims:
    token: int = 64        # token-vector width
    action: int = 32       # contrastive action-embedding width
    distance: int = 16     # distance-embedding width
    hidden: int = 64       # recurrent hidden width per direction
    mlp: int = 64          # sentiment-head hidden width
    max_distance: int = 10 # distances clamp to [-K, K]

    def __post_init__(self) -> None:
        for name in ("token", "action", "distance", "hidden", "mlp", "max_distance"):
            if getattr(self, name) < 1:
                raise ValueError(f"dims.{name} must be >= 1")

    @property
    def distance_buckets(self) -> int:
        return 2 * self.max_distance + 1

    @property
    def features(self) -> int:
        # stack summary (2H) + buffer summary (2H) + history (H) + distance
        return 5 * self.hidden + self.distance


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]  # words[0] is the shared unknown-token row

    def __post_init__(self) -> None:
        if not self.words or self.words[0] != UNK:
            raise ValueError(f"vocabulary must start with {UNK!r}")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    def lookup(self, word: str) -> int:
        return self._index.get(word, 0)

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.words).encode("utf-8")).hexdigest()

    @staticmethod
    def build(sentences: Iterable[Sentence]) -> "Vocabulary":
        seen = sorted({t.surface for s in sentences for t in s.tokens})
        return Vocabulary((UNK, *seen))


def array_specs(dims: Dims, vocab_size: int | None) -> list[tuple[str, tuple[int, ...]]]:
    """Names and shapes of every learnable array, in a fixed order."""
    h4 = 4 * dims.hidden
    specs: list[tuple[str, tuple[int, ...]]] = []
    if vocab_size is not None:
        specs.append(("tok_emb", (vocab_size, dims.token)))
    specs.extend(
        [
            ("act_emb", (N_ACTIONS, dims.action)),
            ("dist_emb", (dims.distance_buckets, dims.distance)),
            ("hist_W", (h4, N_ACTIONS)),
            ("hist_U", (h4, dims.hidden)),
            ("hist_b", (h4,)),
        ]
    )
    for prefix in ("stack", "buf"):
        for direction in ("fw", "bw"):
            specs.extend(
                [
                    (f"{prefix}_{direction}_W", (h4, dims.token)),
                    (f"{prefix}_{direction}_U", (h4, dims.hidden)),
                    (f"{prefix}_{direction}_b", (h4,)),
                ]
            )
    specs.extend(
        [
            ("act_out_W", (N_ACTIONS, dims.features)),
            ("act_out_b", (N_ACTIONS,)),
            ("sent_W1", (dims.mlp, dims.features)),
            ("sent_b1", (dims.mlp,)),
            ("sent_W2", (N_SENTIMENTS, dims.mlp)),
            ("sent_b2", (N_SENTIMENTS,)),
        ]
    )
    return specs


@dataclass
class ScorerParams:
    """All learnable parameters plus their dimension/vocabulary contract."""

    dims: Dims
    vocab: Vocabulary | None
    arrays: dict

    def __post_init__(self) -> None:
        expected = dict(array_specs(self.dims, len(self.vocab) if self.vocab else None))
        got = {name: tuple(a.shape) for name, a in self.arrays.items()}
        if got != {n: tuple(s) for n, s in expected.items()}:
            raise DimMismatchError(
                f"parameter arrays do not match the declared dimensions: {got} vs {expected}"
            )

    @property
    def external(self) -> bool:
        return self.vocab is None

    def copy(self) -> "ScorerParams":
        return ScorerParams(self.dims, self.vocab, {k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def n_parameters(self) -> int:
        return sum(a.size for a in self.arrays.values())


def init_params(dims: Dims, vocab: Vocabulary | None, seed: int) -> ScorerParams:
    """Uniform(-0.1, 0.1) initialization from one seeded generator."""
    rng = np.random.default_rng(seed)
    arrays = {
        name: rng.uniform(-0.1, 0.1, shape)
        for name, shape in array_specs(dims, len(vocab) if vocab else None)
    }
    return ScorerParams(dims=dims, vocab=vocab, arrays=arrays)


class TokenVectors:
    """External per-(sentence, token) vectors keyed like the corpus."""

    def __init__(self, dim: int, rows: dict):
        self.dim = dim
        self.rows = rows

    def get(self, sentence_id: str, index: int) -> np.ndarray:
        try:
            return self.rows[(sentence_id, index)]
        except KeyError:
            raise MissingVectorError(
                f"no vector for sentence {sentence_id!r} token {index}"
            ) from None


def embed_tokens(
    sentence: Sentence, params: ScorerParams, vectors: TokenVectors | None = None
) -> np.ndarray:
    """One vector per token: lookup-table rows, or external-file rows."""
    if params.external:
        if vectors is None:
            raise MissingVectorError("external-vector mode needs a loaded vector file")
        if vectors.dim != params.dims.token:
            raise DimMismatchError(
                f"vector file dim {vectors.dim} != configured token dim {params.dims.token}"
            )
        return np.stack([vectors.get(sentence.id, t.index) for t in sentence.tokens])
    table = params.arrays["tok_emb"]
    idx = [params.vocab.lookup(t.surface) for t in sentence.tokens]
    return table[idx]


# ---------------------------------------------------------------------------
# State featurization


@dataclass(frozen=True)
class PreparedState:
    """Static structure of one state: everything except token-vector values."""

    stack_spans: tuple  # (start, end) per stack constituent, bottom to top
    buffer_indices: tuple
    history_ids: tuple
    distance_bucket: int
    legal_ids: tuple


def prepare_state(state: ParserState, dims: Dims) -> PreparedState:
    if len(state.stack) >= 2:
        d = state.stack[-1].span.start - state.stack[-2].span.end
        d = max(-dims.max_distance, min(dims.max_distance, d))
    else:
        d = 0  # reserved bucket: fewer than two constituents
    return PreparedState(
        stack_spans=tuple((c.span.start, c.span.end) for c in state.stack),
        buffer_indices=tuple(state.buffer),
        history_ids=tuple(int(a) for a in state.history),
        distance_bucket=d + dims.max_distance,
        legal_ids=tuple(sorted(int(a) for a in legal_actions(state))),
    )


_EYE7 = np.eye(N_ACTIONS)


def _state_sequences(prepared: PreparedState, X: np.ndarray):
    stack_seq = (
        np.stack([X[a : b + 1].mean(axis=0) for a, b in prepared.stack_spans])
        if prepared.stack_spans
        else np.zeros((0, X.shape[1]))
    )
    buf_seq = X[list(prepared.buffer_indices)] if prepared.buffer_indices else np.zeros((0, X.shape[1]))
    hist_seq = (
        _EYE7[list(prepared.history_ids)] if prepared.history_ids else np.zeros((0, N_ACTIONS))
    )
    return stack_seq, buf_seq, hist_seq


@dataclass
class FeatureCache:
    prepared: tuple
    X_by_state: tuple               # token matrices, one reference per state
    stack_caches: tuple
    buf_caches: tuple
    hist_cache: lstm.LstmCache
    dist_rows: np.ndarray


def features_forward(
    prepared_states: Sequence[PreparedState],
    X_by_state: Sequence[np.ndarray],
    params: ScorerParams,
) -> tuple[np.ndarray, FeatureCache]:
    """Feature matrix (one row per state) plus everything backward needs.

    X_by_state supplies each state's sentence token matrix (shared rows are
    fine; gradients are routed back per state).
    """
    arrays = params.arrays
    stack_seqs, buf_seqs, hist_seqs = [], [], []
    for prepared, X in zip(prepared_states, X_by_state):
        s, bu, hi = _state_sequences(prepared, X)
        stack_seqs.append(s)
        buf_seqs.append(bu)
        hist_seqs.append(hi)
    stack_sum, stack_caches = lstm.bidirectional_forward(arrays, "stack", stack_seqs)
    buf_sum, buf_caches = lstm.bidirectional_forward(arrays, "buf", buf_seqs)
    hist_sum, hist_cache = lstm.forward(
        arrays["hist_W"], arrays["hist_U"], arrays["hist_b"], hist_seqs
    )
    dist_rows = np.array([p.distance_bucket for p in prepared_states], dtype=int)
    dist = arrays["dist_emb"][dist_rows]
    features = np.concatenate([stack_sum, buf_sum, hist_sum, dist], axis=1)
    cache = FeatureCache(
        prepared=tuple(prepared_states),
        X_by_state=tuple(X_by_state),
        stack_caches=stack_caches,
        buf_caches=buf_caches,
        hist_cache=hist_cache,
        dist_rows=dist_rows,
    )
    return features, cache


def features_backward(
    cache: FeatureCache,
    d_features: np.ndarray,
    params: ScorerParams,
    grads: dict,
) -> list[np.ndarray]:
    """Accumulate parameter gradients; return per-state dX matrices."""
    H = params.dims.hidden
    arrays = params.arrays
    d_stack = d_features[:, : 2 * H]
    d_buf = d_features[:, 2 * H : 4 * H]
    d_hist = d_features[:, 4 * H : 5 * H]
    d_dist = d_features[:, 5 * H :]

    np.add.at(grads["dist_emb"], cache.dist_rows, d_dist)

    dW, dU, db, _ = lstm.backward(
        arrays["hist_W"], arrays["hist_U"], arrays["hist_b"], cache.hist_cache, d_hist
    )
    grads["hist_W"] += dW
    grads["hist_U"] += dU
    grads["hist_b"] += db

    d_stack_seqs = lstm.bidirectional_backward(arrays, "stack", cache.stack_caches, d_stack, grads)
    d_buf_seqs = lstm.bidirectional_backward(arrays, "buf", cache.buf_caches, d_buf, grads)

    d_X_per_state = []
    for prepared, X, ds, dbuf in zip(cache.prepared, cache.X_by_state, d_stack_seqs, d_buf_seqs):
        dX = np.zeros_like(X)
        for row, (a, b) in enumerate(prepared.stack_spans):
            dX[a : b + 1] += ds[row] / (b - a + 1)
        if prepared.buffer_indices:
            np.add.at(dX, list(prepared.buffer_indices), dbuf)
        d_X_per_state.append(dX)
    return d_X_per_state


@dataclass(frozen=True)
class StateFeatures:
    """The state summary vector with named views of its blocks."""

    vector: np.ndarray
    hidden: int
    distance_bucket: int

    @property
    def stack_summary(self) -> np.ndarray:
        return self.vector[: 2 * self.hidden]

    @property
    def buffer_summary(self) -> np.ndarray:
        return self.vector[2 * self.hidden : 4 * self.hidden]

    @property
    def history_summary(self) -> np.ndarray:
        return self.vector[4 * self.hidden : 5 * self.hidden]

    @property
    def distance_vector(self) -> np.ndarray:
        return self.vector[5 * self.hidden :]


def summarize(
    state: ParserState,
    token_matrix: np.ndarray,
    params: ScorerParams,
) -> StateFeatures:
    """Single-state feature vector (the batched path with one row)."""
    prepared = prepare_state(state, params.dims)
    features, _ = features_forward([prepared], [token_matrix], params)
    return StateFeatures(
        vector=features[0], hidden=params.dims.hidden, distance_bucket=prepared.distance_bucket
    )


def action_logits(features: np.ndarray, params: ScorerParams) -> np.ndarray:
    return features @ params.arrays["act_out_W"].T + params.arrays["act_out_b"]


def masked_softmax(logits: np.ndarray, legal_mask: np.ndarray) -> np.ndarray:
    """Softmax over the legal actions only; illegal entries are exactly 0."""
    masked = np.where(legal_mask, logits, -np.inf)
    peak = masked.max(axis=-1, keepdims=True)
    ex = np.exp(masked - peak)
    ex = np.where(legal_mask, ex, 0.0)
    return ex / ex.sum(axis=-1, keepdims=True)


def legal_mask_from_ids(legal_ids: Iterable[int]) -> np.ndarray:
    mask = np.zeros(N_ACTIONS, dtype=bool)
    mask[list(legal_ids)] = True
    return mask


def action_distribution(
    features: StateFeatures | np.ndarray, legal, params: ScorerParams
) -> np.ndarray:
    """Probability over the seven actions, zero outside the legal set."""
    vec = features.vector if isinstance(features, StateFeatures) else features
    if isinstance(legal, np.ndarray) and legal.dtype == bool:
        mask = legal
    else:
        mask = legal_mask_from_ids(int(a) for a in legal)
    if not mask.any():
        raise ValueError("legal set must be non-empty")
    return masked_softmax(action_logits(vec, params), mask)


def sentiment_logits(features: np.ndarray, params: ScorerParams) -> np.ndarray:
    hidden = np.tanh(features @ params.arrays["sent_W1"].T + params.arrays["sent_b1"])
    return hidden @ params.arrays["sent_W2"].T + params.arrays["sent_b2"]


def sentiment_distribution(
    features: StateFeatures | np.ndarray, params: ScorerParams
) -> np.ndarray:
    vec = features.vector if isinstance(features, StateFeatures) else features
    z = sentiment_logits(vec, params)
    z = z - z.max(axis=-1, keepdims=True)
    ex = np.exp(z)
    return ex / ex.sum(axis=-1, keepdims=True)
