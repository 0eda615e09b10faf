"""Shared domain types: tokens, spans, triplets, actions, parser states.

All types are immutable values after construction and safe to share
between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from .errors import OutOfBoundsError, OverlapError


class Polarity(IntEnum):
    """Sentiment class. NONE (label 3) is the per-step default, never gold."""

    POS = 0
    NEG = 1
    NEU = 2
    NONE = 3


class Action(IntEnum):
    """The seven transitions, with fixed numeric ids for stable encoding."""

    SHIFT = 0           # SF: move the buffer front onto the stack
    STOP = 1            # ST: clear the stack and terminate
    MERGE = 2           # M: join the top two (text-adjacent) constituents
    LEFT_REMOVE = 3     # LN: drop the constituent below the top
    RIGHT_REMOVE = 4    # RN: drop the top constituent
    LEFT_RELATION = 5   # LR: top is the aspect, below-top the opinion
    RIGHT_RELATION = 6  # RR: below-top is the aspect, top the opinion

    @property
    def tag(self) -> str:
        return _ACTION_TAGS[self]


_ACTION_TAGS = {
    Action.SHIFT: "SF",
    Action.STOP: "ST",
    Action.MERGE: "M",
    Action.LEFT_REMOVE: "LN",
    Action.RIGHT_REMOVE: "RN",
    Action.LEFT_RELATION: "LR",
    Action.RIGHT_RELATION: "RR",
}

ACTION_BY_TAG = {tag: action for action, tag in _ACTION_TAGS.items()}

RELATION_ACTIONS = frozenset({Action.LEFT_RELATION, Action.RIGHT_RELATION})


class Direction(IntEnum):
    """Which side of the opinion the aspect sits on."""

    LEFT = 0   # aspect right of opinion (formed by LR)
    RIGHT = 1  # aspect left of opinion (formed by RR)


@dataclass(frozen=True, order=True)
class Span:
    """Contiguous token range, inclusive on both ends, 0-based."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise OutOfBoundsError(f"span start must be >= 0, got {self.start}")
        if self.end < self.start:
            raise OutOfBoundsError(f"span end {self.end} < start {self.start}")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def adjacent_before(self, other: "Span") -> bool:
        """True when self ends immediately left of other."""
        return self.end + 1 == other.start

    @staticmethod
    def from_indices(indices: Sequence[int]) -> "Span":
        """Build a span from an explicit, gap-free index list."""
        if not indices:
            raise OutOfBoundsError("empty index list")
        lo, hi = min(indices), max(indices)
        if sorted(indices) != list(range(lo, hi + 1)):
            from .errors import NoncontiguousError

            raise NoncontiguousError(f"index list {list(indices)} has gaps")
        return Span(lo, hi)


@dataclass(frozen=True)
class Token:
    index: int
    surface: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise OutOfBoundsError(f"token index must be >= 0, got {self.index}")
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True)
class GoldTriplet:
    """Annotated (aspect, opinion, polarity). Spans never overlap."""

    aspect: Span
    opinion: Span
    polarity: Polarity

    def __post_init__(self) -> None:
        if self.aspect.overlaps(self.opinion):
            raise OverlapError(
                f"aspect {self.aspect} overlaps opinion {self.opinion}"
            )
        if self.polarity is Polarity.NONE:
            raise ValueError("gold triplets carry a real polarity, not NONE")

    @property
    def pair(self) -> tuple[Span, Span]:
        return (self.aspect, self.opinion)


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    triplets: tuple[GoldTriplet, ...] = ()

    def __post_init__(self) -> None:
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise OutOfBoundsError(
                    f"token indices must be exactly 0..n-1; position {i} has {tok.index}"
                )
        n = len(self.tokens)
        for t in self.triplets:
            for span in (t.aspect, t.opinion):
                if span.end >= n:
                    raise OutOfBoundsError(
                        f"span {span} exceeds sentence length {n} in {self.id!r}"
                    )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def text(self, span: Span) -> str:
        return " ".join(t.surface for t in self.tokens[span.start : span.end + 1])


def make_sentence(
    sentence_id: str,
    surfaces: Iterable[str],
    triplets: Iterable[GoldTriplet | tuple] = (),
) -> Sentence:
    """Validated Sentence constructor.

    Triplets may be GoldTriplet values or raw (aspect-indices,
    opinion-indices, polarity-name) tuples.
    """
    tokens = tuple(Token(i, s) for i, s in enumerate(surfaces))
    if not tokens:
        raise ValueError("a sentence needs at least one token")
    built = []
    for t in triplets:
        if isinstance(t, GoldTriplet):
            built.append(t)
        else:
            aspect, opinion, polarity = t
            if not isinstance(polarity, Polarity):
                polarity = Polarity[str(polarity)]
            if not isinstance(aspect, Span):
                aspect = Span.from_indices(aspect)
            if not isinstance(opinion, Span):
                opinion = Span.from_indices(opinion)
            built.append(GoldTriplet(aspect, opinion, polarity))
    return Sentence(sentence_id, tokens, tuple(built))


@dataclass(frozen=True)
class Constituent:
    """A contiguous stack item; merged marks a product of one or more M."""

    span: Span
    merged: bool = False


@dataclass(frozen=True)
class PairRelation:
    """A formed (aspect, opinion) relation with direction and sentiment."""

    aspect: Constituent
    opinion: Constituent
    direction: Direction
    sentiment: Polarity = Polarity.NONE

    def __post_init__(self) -> None:
        if self.direction is Direction.LEFT:
            ok = self.opinion.span.end < self.aspect.span.start
        else:
            ok = self.aspect.span.end < self.opinion.span.start
        if not ok:
            raise OverlapError(
                f"direction {self.direction.name} inconsistent with spans "
                f"{self.aspect.span} / {self.opinion.span}"
            )

    @property
    def pair(self) -> tuple[Span, Span]:
        return (self.aspect.span, self.opinion.span)

    @property
    def key(self) -> tuple[Span, Span, Direction]:
        return (self.aspect.span, self.opinion.span, self.direction)


@dataclass(frozen=True)
class ParserState:
    """Configuration (stack, buffer, aspects, opinions, relations) + history.

    The stack top is the last element; the buffer front is the first.
    """

    stack: tuple[Constituent, ...] = ()
    buffer: tuple[int, ...] = ()
    aspects: frozenset[Constituent] = frozenset()
    opinions: frozenset[Constituent] = frozenset()
    relations: frozenset[PairRelation] = frozenset()
    history: tuple[Action, ...] = ()


@dataclass(frozen=True)
class TraceStep:
    """One derivation row: snapshots around one applied action."""

    action: Action
    stack_before: tuple[Constituent, ...]
    buffer_before: tuple[int, ...]
    stack_after: tuple[Constituent, ...]
    buffer_after: tuple[int, ...]
    sentiment: Polarity = Polarity.NONE
