"""Greedy decoding, exact-match pair/triplet metrics, and complexity runs.

Decoding picks the highest-probability legal action at every step (ties go
to the lowest action id) and attaches the argmax non-default sentiment at
relation steps. Incremental summaries keep a decode linear-ish in practice:
the action-history recurrence advances one cell per step, and buffer
summaries are cached per buffer position.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lstm
from .core import (
    Action,
    PairRelation,
    Polarity,
    Sentence,
    TraceStep,
)
from .data import Corpus
from .errors import IdMismatchError, StepCapExceededError
from .scorer import (
    N_ACTIONS,
    ScorerParams,
    TokenVectors,
    embed_tokens,
    legal_mask_from_ids,
    masked_softmax,
)
from .transition import apply, initial_state, is_terminal, legal_actions, step_bound

RELATIONS = (Action.LEFT_RELATION, Action.RIGHT_RELATION)


@dataclass(frozen=True)
class PredictionSet:
    sentence_id: str
    relations: tuple  # PairRelation, in formation order, sentiment attached
    steps: tuple      # TraceStep


class _SentenceScorer:
    """Per-sentence decode state: token matrix and reusable summaries."""

    def __init__(self, sentence: Sentence, params: ScorerParams, vectors=None):
        self.params = params
        self.dims = params.dims
        self.X = embed_tokens(sentence, params, vectors)
        a = params.arrays
        n = len(sentence)
        # Backward-direction buffer summary for suffix [i:]: one right-to-left
        # scan gives every suffix's final hidden at once.
        bw = lstm.scan(a["buf_bw_W"], a["buf_bw_U"], a["buf_bw_b"], self.X[::-1])
        self.buf_bw_for_suffix = bw[::-1]  # row i = summary of X[i:], row n = empty
        self.buf_fw_cache: dict[int, np.ndarray] = {}
        self.hist_h = np.zeros(self.dims.hidden)
        self.hist_c = np.zeros(self.dims.hidden)

    def advance_history(self, action: Action) -> None:
        onehot = np.zeros(N_ACTIONS)
        onehot[int(action)] = 1.0
        a = self.params.arrays
        self.hist_h, self.hist_c = lstm.cell_step(
            a["hist_W"], a["hist_U"], a["hist_b"], onehot, self.hist_h, self.hist_c
        )

    def _buf_fw(self, front: int) -> np.ndarray:
        if front not in self.buf_fw_cache:
            a = self.params.arrays
            h = np.zeros(self.dims.hidden)
            c = np.zeros(self.dims.hidden)
            for t in range(front, len(self.X)):
                h, c = lstm.cell_step(a["buf_fw_W"], a["buf_fw_U"], a["buf_fw_b"], self.X[t], h, c)
            self.buf_fw_cache[front] = h
        return self.buf_fw_cache[front]

    def features(self, state) -> np.ndarray:
        a = self.params.arrays
        H = self.dims.hidden
        if state.stack:
            stack_seq = np.stack(
                [self.X[c.span.start : c.span.end + 1].mean(axis=0) for c in state.stack]
            )
            sf, _ = lstm.forward(a["stack_fw_W"], a["stack_fw_U"], a["stack_fw_b"], [stack_seq])
            sb, _ = lstm.forward(a["stack_bw_W"], a["stack_bw_U"], a["stack_bw_b"], [stack_seq[::-1]])
            stack_sum = np.concatenate([sf[0], sb[0]])
        else:
            stack_sum = np.zeros(2 * H)
        if state.buffer:
            front = state.buffer[0]
            buf_sum = np.concatenate([self._buf_fw(front), self.buf_bw_for_suffix[front]])
        else:
            buf_sum = np.zeros(2 * H)
        if len(state.stack) >= 2:
            d = state.stack[-1].span.start - state.stack[-2].span.end
            d = max(-self.dims.max_distance, min(self.dims.max_distance, d))
        else:
            d = 0
        dist = a["dist_emb"][d + self.dims.max_distance]
        return np.concatenate([stack_sum, buf_sum, self.hist_h, dist])


def decode(
    sentence: Sentence,
    params: ScorerParams,
    vectors: TokenVectors | None = None,
    step_cap: int | None = None,
) -> PredictionSet:
    """Greedy argmax decode of one sentence."""
    n = len(sentence)
    cap = step_bound(n) if step_cap is None else step_cap
    machine = _SentenceScorer(sentence, params, vectors)
    state = initial_state(n)
    steps: list[TraceStep] = []
    relations: list[PairRelation] = []
    a = params.arrays
    while not is_terminal(state):
        if len(steps) >= cap:
            raise StepCapExceededError(
                f"decode exceeded {cap} steps on {sentence.id!r}"
            )
        legal = legal_actions(state)
        features = machine.features(state)
        logits = features @ a["act_out_W"].T + a["act_out_b"]
        probs = masked_softmax(logits, legal_mask_from_ids(int(x) for x in legal))
        action = Action(int(np.argmax(probs)))
        sentiment = Polarity.NONE
        if action in RELATIONS:
            hidden = np.tanh(features @ a["sent_W1"].T + a["sent_b1"])
            sent_logits = hidden @ a["sent_W2"].T + a["sent_b2"]
            sentiment = Polarity(int(np.argmax(sent_logits[:3])))
        before = state
        state = apply(state, action, sentiment)
        if action in RELATIONS:
            relations.extend(state.relations - before.relations)
        steps.append(
            TraceStep(
                action=action,
                stack_before=before.stack,
                buffer_before=before.buffer,
                stack_after=state.stack,
                buffer_after=state.buffer,
                sentiment=sentiment,
            )
        )
        machine.advance_history(action)
    return PredictionSet(sentence_id=sentence.id, relations=tuple(relations), steps=tuple(steps))


def decode_corpus(
    corpus: Corpus,
    params: ScorerParams,
    vectors: TokenVectors | None = None,
    jobs: int = 1,
) -> list[PredictionSet]:
    """Decode every sentence; order follows the corpus regardless of jobs."""
    if jobs <= 1:
        return [decode(s, params, vectors) for s in corpus.sentences]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: decode(s, params, vectors), corpus.sentences))


def predictions_from_corpus(corpus: Corpus) -> list[PredictionSet]:
    """Reinterpret a triplet file (e.g. decode output) as predictions."""
    from .core import Constituent, Direction

    out = []
    for sentence in corpus.sentences:
        relations = []
        for t in sentence.triplets:
            direction = Direction.RIGHT if t.aspect.end < t.opinion.start else Direction.LEFT
            relations.append(
                PairRelation(
                    Constituent(t.aspect), Constituent(t.opinion), direction, t.polarity
                )
            )
        out.append(PredictionSet(sentence.id, tuple(relations), steps=()))
    return out


@dataclass(frozen=True)
class EvalMetrics:
    precision: float
    recall: float
    f1: float
    predicted: int
    gold: int
    correct: int


def _prediction_keys(prediction: PredictionSet, task: str) -> set:
    if task == "AOPE":
        return {r.pair for r in prediction.relations}
    return {(r.aspect.span, r.opinion.span, r.sentiment) for r in prediction.relations}


def _gold_keys(sentence: Sentence, task: str) -> set:
    if task == "AOPE":
        return {t.pair for t in sentence.triplets}
    return {(t.aspect, t.opinion, t.polarity) for t in sentence.triplets}


def evaluate(
    predictions: Sequence[PredictionSet], gold: Corpus, task: str = "ASTE"
) -> EvalMetrics:
    """Micro-averaged exact span match. AOPE ignores sentiment; the triplet
    task requires it to match as well. Duplicates count once."""
    if task not in ("AOPE", "ASTE"):
        raise ValueError(f"task must be AOPE or ASTE, got {task!r}")
    by_id = {p.sentence_id: p for p in predictions}
    gold_ids = {s.id for s in gold.sentences}
    if set(by_id) != gold_ids:
        missing = sorted(gold_ids ^ set(by_id))[:5]
        raise IdMismatchError(f"prediction/gold sentence ids differ, e.g. {missing}")
    predicted = correct = gold_total = 0
    for sentence in gold.sentences:
        pred_keys = _prediction_keys(by_id[sentence.id], task)
        gold_keys = _gold_keys(sentence, task)
        predicted += len(pred_keys)
        gold_total += len(gold_keys)
        correct += len(pred_keys & gold_keys)
    precision = 100.0 * correct / predicted if predicted else 0.0
    recall = 100.0 * correct / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalMetrics(precision, recall, f1, predicted, gold_total, correct)


@dataclass(frozen=True)
class ComplexityRow:
    sentence_id: str
    tokens: int
    actions: int
    seconds: float


@dataclass(frozen=True)
class ComplexityReport:
    rows: tuple
    slope: float
    intercept: float
    r_squared: float

    @property
    def max_ratio_to_bound(self) -> float:
        return max(r.actions / step_bound(r.tokens) for r in self.rows)


def measure_complexity(
    corpus: Corpus, params: ScorerParams, vectors: TokenVectors | None = None
) -> ComplexityReport:
    """Decode the corpus, record action counts and times, fit actions ~ n."""
    rows = []
    for sentence in corpus.sentences:
        t0 = time.perf_counter()
        prediction = decode(sentence, params, vectors)
        elapsed = time.perf_counter() - t0
        n = len(sentence)
        count = len(prediction.steps)
        if count > step_bound(n):
            raise AssertionError(
                f"decode of {sentence.id!r} took {count} actions, bound {step_bound(n)}"
            )
        rows.append(ComplexityRow(sentence.id, n, count, elapsed))
    ns = np.array([r.tokens for r in rows], dtype=float)
    counts = np.array([r.actions for r in rows], dtype=float)
    if len(set(ns)) >= 2:
        slope, intercept = np.polyfit(ns, counts, 1)
    else:
        slope, intercept = 0.0, float(counts.mean())  # no spread to fit
    fitted = slope * ns + intercept
    ss_res = float(((counts - fitted) ** 2).sum())
    ss_tot = float(((counts - counts.mean()) ** 2).sum())
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ComplexityReport(
        rows=tuple(rows), slope=float(slope), intercept=float(intercept), r_squared=r_squared
    )
