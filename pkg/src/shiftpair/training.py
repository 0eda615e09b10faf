"""Losses, exact gradients, the optimizer, and the teacher-forced loop.

The base loss is mean cross-entropy over action and sentiment heads; the
contrastive loss aligns the embeddings of predicted and gold actions via a
cosine-similarity matrix with diagonal positives. Gradients are exact
reverse-mode; the prediction argmax inside the contrastive term is treated
as constant, so that term only trains the action-embedding table.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import scorer as scoring
from .core import Sentence
from .data import Corpus
from .errors import DimMismatchError, EmptyCorpusError, ZeroVectorEmbeddingError
from .oracle import derive
from .transition import apply, initial_state
from .scorer import (
    Dims,
    PreparedState,
    ScorerParams,
    TokenVectors,
    Vocabulary,
    embed_tokens,
    features_backward,
    features_forward,
    init_params,
    legal_mask_from_ids,
    masked_softmax,
)

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    base: float = 1.0         # weight on the cross-entropy term
    contrastive: float = 0.0  # weight on the embedding-alignment term

    def __post_init__(self) -> None:
        if self.base < 0 or self.contrastive < 0:
            raise ValueError("loss weights must be >= 0")
        if self.base == 0 and self.contrastive == 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class EarlyStop:
    action_accuracy: float
    dev_aope_f1: float


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    epochs: int = 50
    batch_size: int = 4          # sentences per batch; all their steps train
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dims: Dims = field(default_factory=Dims)
    contrastive_symmetric: bool = False
    early_stop: EarlyStop | None = None

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.batch_size == 1:
            warnings.warn(
                "batch size 1 degenerates the contrastive term for "
                "single-step batches", stacklevel=2
            )
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


# ---------------------------------------------------------------------------
# Losses on plain arrays


def base_loss(
    action_probs: np.ndarray,
    gold_actions: np.ndarray,
    sentiment_probs: np.ndarray,
    gold_sentiments: np.ndarray,
) -> float:
    """Mean action NLL plus mean sentiment NLL over one batch of steps."""
    n = len(gold_actions)
    rows = np.arange(n)
    pa = np.clip(action_probs[rows, gold_actions], LOG_FLOOR, None)
    ps = np.clip(sentiment_probs[rows, gold_sentiments], LOG_FLOOR, None)
    return float(-np.log(pa).mean() - np.log(ps).mean())


def _cosine_matrix(U: np.ndarray, V: np.ndarray):
    un = np.linalg.norm(U, axis=1)
    vn = np.linalg.norm(V, axis=1)
    if np.any(un < 1e-300) or np.any(vn < 1e-300):
        raise ZeroVectorEmbeddingError("an action embedding row has zero norm")
    Un = U / un[:, None]
    Vn = V / vn[:, None]
    return Un @ Vn.T, Un, Vn, un, vn


def _logsumexp(S: np.ndarray, axis: int) -> np.ndarray:
    peak = S.max(axis=axis, keepdims=True)
    return (peak + np.log(np.exp(S - peak).sum(axis=axis, keepdims=True))).squeeze(axis)


def contrastive_loss(
    logits: np.ndarray,
    gold_actions: np.ndarray,
    act_emb: np.ndarray,
    legal_masks: np.ndarray | None = None,
    symmetric: bool = False,
) -> float:
    """Alignment loss between predicted- and gold-action embeddings.

    Predicted actions are the (legal-masked) argmax of the logits. With
    similarities S[i, j] = cos(pred_i, gold_j), each gold column j is scored
    against its diagonal positive: -log(exp(S[j,j]) / sum_i exp(S[i,j])),
    averaged over the batch. The symmetric variant averages in the same
    expression row-normalized.
    """
    masked = logits if legal_masks is None else np.where(legal_masks, logits, -np.inf)
    pred = masked.argmax(axis=1)
    U = act_emb[pred]
    V = act_emb[gold_actions]
    S, *_ = _cosine_matrix(U, V)
    n = len(gold_actions)
    diag = np.diag(S)
    loss = float((_logsumexp(S, axis=0) - diag).mean())
    if symmetric:
        loss = 0.5 * (loss + float((_logsumexp(S, axis=1) - diag).mean()))
    return loss


def _contrastive_grad(
    logits: np.ndarray,
    gold_actions: np.ndarray,
    act_emb: np.ndarray,
    legal_masks: np.ndarray | None,
    symmetric: bool,
) -> tuple[float, np.ndarray]:
    """Loss and its exact gradient on the action-embedding table."""
    masked = logits if legal_masks is None else np.where(legal_masks, logits, -np.inf)
    pred = masked.argmax(axis=1)
    U = act_emb[pred]
    V = act_emb[gold_actions]
    S, Un, Vn, un, vn = _cosine_matrix(U, V)
    n = len(gold_actions)
    eye = np.eye(n)

    col_soft = np.exp(S - _logsumexp(S, axis=0)[None, :])
    diag = np.diag(S)
    loss = float((_logsumexp(S, axis=0) - diag).mean())
    dS = (col_soft - eye) / n
    if symmetric:
        row_soft = np.exp(S - _logsumexp(S, axis=1)[:, None])
        loss = 0.5 * (loss + float((_logsumexp(S, axis=1) - diag).mean()))
        dS = 0.5 * dS + 0.5 * (row_soft - eye) / n

    dUn = dS @ Vn
    dVn = dS.T @ Un
    dU = (dUn - (dUn * Un).sum(axis=1, keepdims=True) * Un) / un[:, None]
    dV = (dVn - (dVn * Vn).sum(axis=1, keepdims=True) * Vn) / vn[:, None]
    d_emb = np.zeros_like(act_emb)
    np.add.at(d_emb, pred, dU)
    np.add.at(d_emb, gold_actions, dV)
    return loss, d_emb


def total_loss_arrays(
    action_probs, gold_actions, sentiment_probs, gold_sentiments,
    logits, act_emb, weights: LossWeights,
    legal_masks=None, symmetric=False,
) -> float:
    total = 0.0
    if weights.base:
        total += weights.base * base_loss(
            action_probs, gold_actions, sentiment_probs, gold_sentiments
        )
    if weights.contrastive:
        total += weights.contrastive * contrastive_loss(
            logits, gold_actions, act_emb, legal_masks, symmetric
        )
    return total


# ---------------------------------------------------------------------------
# Teacher-forced steps


@dataclass(frozen=True)
class TrainStep:
    """One supervised decision: a state, its legal set, and the gold labels."""

    sentence_index: int
    prepared: PreparedState
    gold_action: int
    gold_sentiment: int


def steps_from_sentence(sentence: Sentence, dims: Dims, sentence_index: int = 0):
    """Teacher-forcing samples along the oracle trace of one sentence."""
    result = derive(sentence)
    state = initial_state(len(sentence))
    steps = []
    for trace in result.steps:
        steps.append(
            TrainStep(
                sentence_index=sentence_index,
                prepared=scoring.prepare_state(state, dims),
                gold_action=int(trace.action),
                gold_sentiment=int(trace.sentiment),
            )
        )
        state = apply(state, trace.action, trace.sentiment)
    return steps


@dataclass
class Batch:
    steps: tuple
    sentences: tuple  # Sentence objects indexed by TrainStep.sentence_index


def batch_forward(batch: Batch, params: ScorerParams, vectors=None):
    """Shared forward pass: features, logits and distributions for a batch."""
    X_cache = {}
    for step in batch.steps:
        idx = step.sentence_index
        if idx not in X_cache:
            X_cache[idx] = embed_tokens(batch.sentences[idx], params, vectors)
    prepared = [s.prepared for s in batch.steps]
    X_by_state = [X_cache[s.sentence_index] for s in batch.steps]
    features, cache = features_forward(prepared, X_by_state, params)
    logits = scoring.action_logits(features, params)
    legal = np.stack([legal_mask_from_ids(s.prepared.legal_ids) for s in batch.steps])
    action_probs = masked_softmax(logits, legal)
    hidden = np.tanh(features @ params.arrays["sent_W1"].T + params.arrays["sent_b1"])
    sent_logits = hidden @ params.arrays["sent_W2"].T + params.arrays["sent_b2"]
    sent_shift = sent_logits - sent_logits.max(axis=1, keepdims=True)
    sent_ex = np.exp(sent_shift)
    sentiment_probs = sent_ex / sent_ex.sum(axis=1, keepdims=True)
    gold_a = np.array([s.gold_action for s in batch.steps])
    gold_s = np.array([s.gold_sentiment for s in batch.steps])
    return {
        "features": features,
        "cache": cache,
        "logits": logits,
        "legal": legal,
        "action_probs": action_probs,
        "hidden": hidden,
        "sentiment_probs": sentiment_probs,
        "gold_actions": gold_a,
        "gold_sentiments": gold_s,
        "X_cache": X_cache,
    }


def total_loss(batch: Batch, params: ScorerParams, weights: LossWeights,
               vectors=None, symmetric: bool = False) -> float:
    fwd = batch_forward(batch, params, vectors)
    return total_loss_arrays(
        fwd["action_probs"], fwd["gold_actions"],
        fwd["sentiment_probs"], fwd["gold_sentiments"],
        fwd["logits"], params.arrays["act_emb"], weights,
        legal_masks=fwd["legal"], symmetric=symmetric,
    )


def grad(batch: Batch, params: ScorerParams, weights: LossWeights,
         vectors=None, symmetric: bool = False):
    """Exact gradients of the total loss for every parameter array.

    Returns (loss, grads dict, batch accuracy of the action argmax).
    """
    fwd = batch_forward(batch, params, vectors)
    n = len(batch.steps)
    rows = np.arange(n)
    grads = params.zeros_like()
    loss = 0.0

    d_features = np.zeros_like(fwd["features"])
    if weights.base:
        pa = fwd["action_probs"][rows, fwd["gold_actions"]]
        ps = fwd["sentiment_probs"][rows, fwd["gold_sentiments"]]
        loss += weights.base * float(
            -np.log(np.clip(pa, LOG_FLOOR, None)).mean()
            - np.log(np.clip(ps, LOG_FLOOR, None)).mean()
        )
        d_logits = fwd["action_probs"].copy()
        d_logits[rows, fwd["gold_actions"]] -= 1.0
        d_logits[pa < LOG_FLOOR] = 0.0  # clamped rows contribute no gradient
        d_logits *= weights.base / n
        grads["act_out_W"] += d_logits.T @ fwd["features"]
        grads["act_out_b"] += d_logits.sum(axis=0)
        d_features += d_logits @ params.arrays["act_out_W"]

        d_sent = fwd["sentiment_probs"].copy()
        d_sent[rows, fwd["gold_sentiments"]] -= 1.0
        d_sent[ps < LOG_FLOOR] = 0.0
        d_sent *= weights.base / n
        grads["sent_W2"] += d_sent.T @ fwd["hidden"]
        grads["sent_b2"] += d_sent.sum(axis=0)
        d_hidden = d_sent @ params.arrays["sent_W2"]
        d_pre = d_hidden * (1.0 - fwd["hidden"] ** 2)
        grads["sent_W1"] += d_pre.T @ fwd["features"]
        grads["sent_b1"] += d_pre.sum(axis=0)
        d_features += d_pre @ params.arrays["sent_W1"]

    if weights.contrastive:
        con_loss, d_emb = _contrastive_grad(
            fwd["logits"], fwd["gold_actions"], params.arrays["act_emb"],
            fwd["legal"], symmetric,
        )
        loss += weights.contrastive * con_loss
        grads["act_emb"] += weights.contrastive * d_emb

    d_X_per_state = features_backward(fwd["cache"], d_features, params, grads)
    if not params.external:
        vocab = params.vocab
        dX_per_sentence: dict[int, np.ndarray] = {}
        for step, dX in zip(batch.steps, d_X_per_state):
            acc = dX_per_sentence.get(step.sentence_index)
            dX_per_sentence[step.sentence_index] = dX if acc is None else acc + dX
        for sentence_index, dX in dX_per_sentence.items():
            idx = [vocab.lookup(t.surface) for t in batch.sentences[sentence_index].tokens]
            np.add.at(grads["tok_emb"], idx, dX)

    masked = np.where(fwd["legal"], fwd["logits"], -np.inf)
    accuracy = float((masked.argmax(axis=1) == fwd["gold_actions"]).mean())
    return loss, grads, accuracy


# ---------------------------------------------------------------------------
# Optimizer


class Adam:
    """Adaptive-moment step rule with bias correction."""

    def __init__(self, params: ScorerParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, params: ScorerParams, grads: dict) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * (g * g)
            m_hat = self.m[name] / b1c
            v_hat = self.v[name] / b2c
            params.arrays[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Training loop


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    loss: float
    action_accuracy: float
    dev_aope_f1: float | None = None
    dev_aste_f1: float | None = None


@dataclass
class TrainResult:
    params: ScorerParams
    history: list

    @property
    def final_accuracy(self) -> float:
        return self.history[-1].action_accuracy if self.history else 0.0


def train(
    corpus: Corpus,
    config: TrainConfig,
    dev: Corpus | None = None,
    vectors: TokenVectors | None = None,
) -> TrainResult:
    """Teacher-forced training over oracle traces.

    Batches are groups of sentences; every step of a batched sentence is a
    sample. Deterministic for a fixed seed.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot train on an empty corpus")
    vocab = None if vectors is not None else Vocabulary.build(corpus.sentences)
    if vectors is not None and vectors.dim != config.dims.token:
        raise DimMismatchError(
            f"vector file dim {vectors.dim} != configured token dim {config.dims.token}"
        )
    dims = config.dims
    params = init_params(dims, vocab, config.seed)
    steps_by_sentence = [
        steps_from_sentence(s, dims, i) for i, s in enumerate(corpus.sentences)
    ]
    sentences = tuple(corpus.sentences)
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    history: list[EpochMetrics] = []

    for epoch in range(config.epochs):
        order = rng.permutation(len(sentences))
        losses, hits, total = [], 0.0, 0
        for start in range(0, len(order), config.batch_size):
            chosen = order[start : start + config.batch_size]
            steps = tuple(
                step for idx in chosen for step in steps_by_sentence[idx]
            )
            if not steps:
                continue
            batch = Batch(steps=steps, sentences=sentences)
            loss, grads, accuracy = grad(
                batch, params, config.weights, vectors, config.contrastive_symmetric
            )
            optimizer.step(params, grads)
            losses.append(loss * len(steps))
            hits += accuracy * len(steps)
            total += len(steps)
        dev_aope = dev_aste = None
        if dev is not None and len(dev):
            from .decode import decode_corpus, evaluate

            predictions = decode_corpus(dev, params, vectors)
            dev_aope = evaluate(predictions, dev, task="AOPE").f1
            dev_aste = evaluate(predictions, dev, task="ASTE").f1
        metrics = EpochMetrics(
            epoch=epoch + 1,
            loss=sum(losses) / max(total, 1),
            action_accuracy=hits / max(total, 1),
            dev_aope_f1=dev_aope,
            dev_aste_f1=dev_aste,
        )
        history.append(metrics)
        stop = config.early_stop
        if stop is not None and metrics.action_accuracy >= stop.action_accuracy:
            if dev is None or (dev_aope is not None and dev_aope >= stop.dev_aope_f1):
                break
    return TrainResult(params=params, history=history)


# ---------------------------------------------------------------------------
# Finite-difference oracle


@dataclass(frozen=True)
class FiniteDiffReport:
    max_relative_error: float
    checked: int
    worst: str
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def finite_diff_check(
    params: ScorerParams,
    batch: Batch,
    h: float = 1e-4,
    tolerance: float = 1e-4,
    weights: LossWeights = LossWeights(),
    vectors=None,
    symmetric: bool = False,
    sample_fraction: float = 0.01,
    seed: int = 0,
) -> FiniteDiffReport:
    """Central differences against the analytic gradient.

    Checks a seeded coordinate sample of every array plus the whole
    action-embedding table. Relative error uses |a - b| / max(|a|, |b|,
    1e-3): a floor bounded away from zero so near-zero coordinates are
    measured by (scaled) absolute error.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    _, grads, _ = grad(batch, params, weights, vectors, symmetric)
    rng = np.random.default_rng(seed)
    work = params.copy()
    worst = 0.0
    worst_name = ""
    checked = 0
    for name, array in work.arrays.items():
        flat = array.reshape(-1)
        size = flat.size
        if name == "act_emb":
            coords = np.arange(size)
        else:
            k = max(1, int(round(size * sample_fraction)))
            coords = rng.choice(size, size=min(k, size), replace=False)
        analytic_flat = grads[name].reshape(-1)
        for coord in coords:
            orig = flat[coord]
            flat[coord] = orig + h
            up = total_loss(batch, work, weights, vectors, symmetric)
            flat[coord] = orig - h
            down = total_loss(batch, work, weights, vectors, symmetric)
            flat[coord] = orig
            estimate = (up - down) / (2 * h)
            a = analytic_flat[coord]
            rel = abs(a - estimate) / max(abs(a), abs(estimate), 1e-3)
            checked += 1
            if rel > worst:
                worst = rel
                worst_name = f"{name}[{coord}]"
    return FiniteDiffReport(
        max_relative_error=worst, checked=checked, worst=worst_name, tolerance=tolerance
    )
