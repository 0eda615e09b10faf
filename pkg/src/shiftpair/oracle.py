"""Derive gold action sequences from annotated sentences, and measure how
much of the annotation the action system can express.

The per-state decision procedure is a fixed priority list over the seven
actions: merge entity fragments first, then form exactly-matching unformed
pairs, then discard constituents with no remaining partner, then shift.
Pairs the policy cannot reach are reported, not fatal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from . import transition
from .core import (
    Action,
    Constituent,
    GoldTriplet,
    PairRelation,
    ParserState,
    Polarity,
    Sentence,
    Span,
    TraceStep,
)

PairKey = tuple[Span, Span]  # (aspect span, opinion span)


@dataclass(frozen=True)
class GoldIndex:
    """Precomputed lookup structures for one sentence's annotation."""

    entities: tuple[Span, ...]
    pair_sentiment: dict  # PairKey -> Polarity
    partners: dict  # Span -> tuple[(PairKey, partner Span), ...]

    @staticmethod
    def build(sentence: Sentence) -> "GoldIndex":
        pair_sentiment: dict[PairKey, Polarity] = {}
        partners: dict[Span, list] = {}
        entities: set[Span] = set()
        for t in sentence.triplets:
            key = (t.aspect, t.opinion)
            pair_sentiment.setdefault(key, t.polarity)
            entities.add(t.aspect)
            entities.add(t.opinion)
            partners.setdefault(t.aspect, []).append((key, t.opinion))
            partners.setdefault(t.opinion, []).append((key, t.aspect))
        return GoldIndex(
            entities=tuple(sorted(entities)),
            pair_sentiment=pair_sentiment,
            partners={e: tuple(v) for e, v in partners.items()},
        )


@dataclass(frozen=True)
class OracleResult:
    actions: tuple[Action, ...]
    steps: tuple[TraceStep, ...]
    emitted: tuple[PairRelation, ...]
    unreachable: tuple[GoldTriplet, ...]


def _fragment_of(index: GoldIndex, span: Span) -> tuple[Span, ...]:
    """Entities this span is a prefix/fragment/whole of."""
    return tuple(e for e in index.entities if e.contains(span))


def _mergeable(index: GoldIndex, below: Constituent, top: Constituent) -> bool:
    if not below.span.adjacent_before(top.span):
        return False
    return any(
        e.contains(below.span) and e.contains(top.span) for e in index.entities
    )


def _useful_below(
    index: GoldIndex, span: Span, horizon: int, emitted: set[PairKey]
) -> bool:
    """A buried constituent is worth keeping while some entity it belongs to
    still has an unformed pair whose partner lies at or right of the top."""
    for entity in _fragment_of(index, span):
        for key, partner in index.partners.get(entity, ()):
            if key in emitted:
                continue
            if partner.start >= horizon:
                return True
    return False


def _useful_top(
    index: GoldIndex, span: Span, stack: Sequence[Constituent], emitted: set[PairKey]
) -> bool:
    """The top is worth keeping while a partner is still ahead, or already
    sits below it on the stack (it can surface again after removals)."""
    top_start = stack[-1].span.start
    below = stack[:-1]
    for entity in _fragment_of(index, span):
        for key, partner in index.partners.get(entity, ()):
            if key in emitted:
                continue
            if partner.start >= top_start:
                return True
            if any(partner.contains(c.span) for c in below):
                return True
    return False


def get_action(state: ParserState, gold: Sentence | GoldIndex, emitted: Iterable[PairKey] = ()) -> Action:
    """Gold policy decision for a state with at least two stack items."""
    index = gold if isinstance(gold, GoldIndex) else GoldIndex.build(gold)
    emitted_set = set(emitted)
    if len(state.stack) < 2:
        raise ValueError("get_action expects at least two stack constituents")
    below, top = state.stack[-2], state.stack[-1]

    if _mergeable(index, below, top):
        return Action.MERGE
    if (top.span, below.span) in index.pair_sentiment and (top.span, below.span) not in emitted_set:
        return Action.LEFT_RELATION
    if (below.span, top.span) in index.pair_sentiment and (below.span, top.span) not in emitted_set:
        return Action.RIGHT_RELATION
    if not _useful_below(index, below.span, top.span.start, emitted_set):
        return Action.LEFT_REMOVE
    if not _useful_top(index, top.span, state.stack, emitted_set):
        return Action.RIGHT_REMOVE
    if state.buffer:
        return Action.SHIFT
    # Forced discard: both tops still look useful but nothing can fire.
    return Action.LEFT_REMOVE


def _covered(entity: Span, stack: Sequence[Constituent]) -> bool:
    """True when the stack holds fragments that tile the entity exactly."""
    inside = sorted(
        (c.span for c in stack if entity.contains(c.span)), key=lambda s: s.start
    )
    total = sum(len(s) for s in inside)
    return total == len(entity)


def _formable(index: GoldIndex, emitted: set[PairKey], stack: Sequence[Constituent]) -> bool:
    """Some unformed gold pair still has both entities live on the stack."""
    for key in index.pair_sentiment:
        if key in emitted:
            continue
        aspect, opinion = key
        if _covered(aspect, stack) and _covered(opinion, stack):
            return True
    return False


def derive(sentence: Sentence) -> OracleResult:
    """Run the gold policy over one sentence and record the full trace.

    Shifts whenever fewer than two items are stacked, consults the policy
    otherwise, and stops once the buffer is drained and no unformed pair
    remains reachable. Replaying the returned actions via transition.apply
    reproduces the emitted pairs exactly.
    """
    index = GoldIndex.build(sentence)
    state = transition.initial_state(len(sentence))
    emitted: set[PairKey] = set()
    actions: list[Action] = []
    steps: list[TraceStep] = []
    relations: list[PairRelation] = []

    def record(action: Action, sentiment: Polarity) -> None:
        nonlocal state
        new_state = transition.apply(state, action, sentiment)
        steps.append(
            TraceStep(
                action=action,
                stack_before=state.stack,
                buffer_before=state.buffer,
                stack_after=new_state.stack,
                buffer_after=new_state.buffer,
                sentiment=sentiment,
            )
        )
        actions.append(action)
        state = new_state

    while True:
        if len(state.stack) < 2:
            if not state.buffer:
                break
            record(Action.SHIFT, Polarity.NONE)
            continue
        if not state.buffer and not _formable(index, emitted, state.stack):
            break
        action = get_action(state, index, emitted)
        if action in (Action.LEFT_RELATION, Action.RIGHT_RELATION):
            below, top = state.stack[-2], state.stack[-1]
            if action is Action.LEFT_RELATION:
                key = (top.span, below.span)
            else:
                key = (below.span, top.span)
            sentiment = index.pair_sentiment.get(key, Polarity.NONE)
            before = state.relations
            record(action, sentiment)
            emitted.add(key)
            relations.extend(state.relations - before)
        else:
            record(action, Polarity.NONE)

    record(Action.STOP, Polarity.NONE)
    unreachable = tuple(t for t in sentence.triplets if t.pair not in emitted)
    return OracleResult(
        actions=tuple(actions),
        steps=tuple(steps),
        emitted=tuple(relations),
        unreachable=unreachable,
    )


@dataclass(frozen=True)
class CoverageCounts:
    """Micro counts for pair coverage: replayed, gold, and their overlap."""

    predicted: int
    gold: int
    correct: int

    @property
    def precision(self) -> float:
        if self.predicted == 0:
            return 100.0  # vacuous: nothing replayed, nothing wrong
        return 100.0 * self.correct / self.predicted

    @property
    def recall(self) -> float:
        if self.gold == 0:
            return 100.0  # vacuous: nothing annotated, nothing missed
        return 100.0 * self.correct / self.gold

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)

    def __add__(self, other: "CoverageCounts") -> "CoverageCounts":
        return CoverageCounts(
            self.predicted + other.predicted,
            self.gold + other.gold,
            self.correct + other.correct,
        )


def _coverage_of_sentences(sentences) -> CoverageCounts:
    counts = CoverageCounts(0, 0, 0)
    for sentence in sentences:
        result = derive(sentence)
        sentiments = [s.sentiment for s in result.steps]
        final = transition.replay(sentence, result.actions, sentiments)
        replayed = {r.pair for r in final.relations}
        gold = {t.pair for t in sentence.triplets}
        counts += CoverageCounts(
            predicted=len(replayed),
            gold=len(gold),
            correct=len(replayed & gold),
        )
    return counts


def coverage(corpus, jobs: int = 1) -> CoverageCounts:
    """Replay every sentence's derived actions and score the recovered pairs
    against the gold pairs, micro-aggregated over the corpus.

    jobs > 1 fans sentences out over processes; counts merge associatively,
    so the result is identical either way.
    """
    if jobs <= 1 or len(corpus.sentences) < 2 * jobs:
        return _coverage_of_sentences(corpus.sentences)
    from concurrent.futures import ProcessPoolExecutor

    chunks = [corpus.sentences[i::jobs] for i in range(jobs)]
    counts = CoverageCounts(0, 0, 0)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_coverage_of_sentences, chunks):
            counts += part
    return counts
