"""The pure state machine: legality, application, termination, bounded runs.

All functions are pure over immutable states; independent sentences can be
processed in parallel.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .core import (
    Action,
    Constituent,
    Direction,
    PairRelation,
    ParserState,
    Polarity,
    Sentence,
    Span,
    TraceStep,
)
from .errors import IllegalActionError, StepCapExceededError

LegalitySet = frozenset  # of Action

#: Any legal action sequence over an n-token sentence is at most this long:
#: n shifts, at most n stack reductions, at most 2 relation actions per
#: stack configuration (<= 2n+1 configurations), and one stop.
def step_bound(n: int) -> int:
    return 6 * n + 3


def initial_state(n: int) -> ParserState:
    """All tokens queued in the buffer, everything else empty."""
    return ParserState(buffer=tuple(range(n)))


def legal_actions(state: ParserState) -> LegalitySet:
    """Exactly the actions whose preconditions hold in this state."""
    legal = set()
    if state.buffer:
        legal.add(Action.SHIFT)
    else:
        legal.add(Action.STOP)
    if len(state.stack) >= 2:
        below, top = state.stack[-2], state.stack[-1]
        if below.span.adjacent_before(top.span):
            legal.add(Action.MERGE)
        legal.add(Action.LEFT_REMOVE)
        legal.add(Action.RIGHT_REMOVE)
        # A relation may form at most once per (aspect, opinion, direction).
        keys = {r.key for r in state.relations}
        if (top.span, below.span, Direction.LEFT) not in keys:
            legal.add(Action.LEFT_RELATION)
        if (below.span, top.span, Direction.RIGHT) not in keys:
            legal.add(Action.RIGHT_RELATION)
    return frozenset(legal)


def apply(
    state: ParserState, action: Action, sentiment: Polarity = Polarity.NONE
) -> ParserState:
    """Successor state for one action.

    The sentiment argument is only consulted by the relation actions, which
    stamp it on the new relation.
    """
    if action not in legal_actions(state):
        raise IllegalActionError(
            f"action {action.tag} illegal in state with |stack|={len(state.stack)}, "
            f"|buffer|={len(state.buffer)}"
        )
    history = state.history + (action,)
    if action is Action.SHIFT:
        idx = state.buffer[0]
        return ParserState(
            stack=state.stack + (Constituent(Span(idx, idx)),),
            buffer=state.buffer[1:],
            aspects=state.aspects,
            opinions=state.opinions,
            relations=state.relations,
            history=history,
        )
    if action is Action.STOP:
        return ParserState(
            stack=(),
            buffer=state.buffer,
            aspects=state.aspects,
            opinions=state.opinions,
            relations=state.relations,
            history=history,
        )
    below, top = state.stack[-2], state.stack[-1]
    if action is Action.MERGE:
        merged = Constituent(Span(below.span.start, top.span.end), merged=True)
        return ParserState(
            stack=state.stack[:-2] + (merged,),
            buffer=state.buffer,
            aspects=state.aspects,
            opinions=state.opinions,
            relations=state.relations,
            history=history,
        )
    if action is Action.LEFT_REMOVE:
        return ParserState(
            stack=state.stack[:-2] + (top,),
            buffer=state.buffer,
            aspects=state.aspects,
            opinions=state.opinions,
            relations=state.relations,
            history=history,
        )
    if action is Action.RIGHT_REMOVE:
        return ParserState(
            stack=state.stack[:-1],
            buffer=state.buffer,
            aspects=state.aspects,
            opinions=state.opinions,
            relations=state.relations,
            history=history,
        )
    if action is Action.LEFT_RELATION:
        relation = PairRelation(top, below, Direction.LEFT, sentiment)
        return ParserState(
            stack=state.stack,
            buffer=state.buffer,
            aspects=state.aspects | {top},
            opinions=state.opinions | {below},
            relations=state.relations | {relation},
            history=history,
        )
    # RIGHT_RELATION
    relation = PairRelation(below, top, Direction.RIGHT, sentiment)
    return ParserState(
        stack=state.stack,
        buffer=state.buffer,
        aspects=state.aspects | {below},
        opinions=state.opinions | {top},
        relations=state.relations | {relation},
        history=history,
    )


def is_terminal(state: ParserState) -> bool:
    """A run terminates exactly when the stop action has been applied."""
    return bool(state.history) and state.history[-1] is Action.STOP


def run_with_policy(
    sentence: Sentence,
    policy: Callable[[ParserState], Action],
    step_cap: int | None = None,
    record: bool = True,
) -> tuple[ParserState, list[TraceStep]]:
    """Execute a policy until the stop action, asserting the run invariants.

    Checks token conservation and the step bound at every step. With
    record=False the trace list is left empty (bulk invariant runs).
    """
    n = len(sentence)
    cap = step_bound(n) if step_cap is None else step_cap
    if cap < step_bound(n):
        raise ValueError(f"step_cap {cap} below the guaranteed bound {step_bound(n)}")
    state = initial_state(n)
    steps: list[TraceStep] = []
    removed = 0
    taken = 0
    while not is_terminal(state):
        if taken >= cap:
            raise StepCapExceededError(
                f"policy exceeded {cap} steps on sentence {sentence.id!r}"
            )
        action = policy(state)
        new_state = apply(state, action)
        if action is Action.LEFT_REMOVE:
            removed += len(state.stack[-2].span)
        elif action is Action.RIGHT_REMOVE:
            removed += len(state.stack[-1].span)
        elif action is Action.STOP:
            removed += sum(len(c.span) for c in state.stack)
        stacked = sum(len(c.span) for c in new_state.stack)
        if len(new_state.buffer) + stacked + removed != n:
            raise AssertionError(
                f"token conservation violated at step {taken} of {sentence.id!r}"
            )
        if record:
            steps.append(
                TraceStep(
                    action=action,
                    stack_before=state.stack,
                    buffer_before=state.buffer,
                    stack_after=new_state.stack,
                    buffer_after=new_state.buffer,
                )
            )
        state = new_state
        taken += 1
    return state, steps


def replay(sentence: Sentence, actions: Sequence[Action],
           sentiments: Sequence[Polarity] | None = None) -> ParserState:
    """Apply a scripted action sequence from the initial state."""
    state = initial_state(len(sentence))
    for i, action in enumerate(actions):
        sentiment = sentiments[i] if sentiments is not None else Polarity.NONE
        state = apply(state, action, sentiment)
    return state


TRACE_COLUMNS = (
    "step", "action", "stack", "buffer", "aspects", "opinions", "relations", "sentiment",
)


def format_trace(sentence: Sentence, steps: Sequence[TraceStep]) -> str:
    """Render a derivation as a tab-separated table, one step per line.

    Each row shows the state after its action; cells render constituents
    as their token text. Replays the actions to recover the output sets.
    """
    def text(c: Constituent) -> str:
        return sentence.text(c.span)

    def render_relation(r: PairRelation) -> str:
        arrow = "->" if r.direction is Direction.RIGHT else "<-"
        left, right = (r.aspect, r.opinion) if r.direction is Direction.RIGHT else (r.opinion, r.aspect)
        return f"({text(left)} {arrow} {text(right)})"

    lines = ["\t".join(TRACE_COLUMNS)]
    state = initial_state(len(sentence))
    for i, step in enumerate(steps, start=1):
        state = apply(state, step.action, step.sentiment)
        if state.stack != step.stack_after or state.buffer != step.buffer_after:
            raise AssertionError(f"trace step {i} does not replay to its recorded state")
        cells = (
            str(i),
            step.action.tag,
            "[" + ", ".join(text(c) for c in state.stack) + "]",
            "[" + ", ".join(sentence.tokens[j].surface for j in state.buffer) + "]",
            "{" + ", ".join(sorted(text(c) for c in state.aspects)) + "}",
            "{" + ", ".join(sorted(text(c) for c in state.opinions)) + "}",
            "{" + ", ".join(sorted(render_relation(r) for r in state.relations)) + "}",
            step.sentiment.name,
        )
        lines.append("\t".join(cells))
    return "\n".join(lines)
