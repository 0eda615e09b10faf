import itertools

from shiftpair import transition
from shiftpair.core import Action, Polarity, Span, make_sentence
from shiftpair.data import Corpus, generate_synthetic
from shiftpair.oracle import CoverageCounts, coverage, derive, get_action

A = Action

TABLE2 = make_sentence("t2", ["Gourmet", "food", "is", "delicious"], [([0, 1], [3], "POS")])


def test_derive_table2_exact_actions():
    res = derive(TABLE2)
    assert [a.tag for a in res.actions] == ["SF", "SF", "M", "SF", "RN", "SF", "RR", "ST"]
    assert len(res.emitted) == 1
    assert res.emitted[0].pair == (Span(0, 1), Span(3, 3))
    assert res.emitted[0].sentiment is Polarity.POS
    assert res.unreachable == ()


def test_get_action_merge_on_entity_fragments():
    state = transition.replay(TABLE2, [A.SHIFT, A.SHIFT])
    assert get_action(state, TABLE2) is A.MERGE


def test_get_action_discards_token_outside_any_entity():
    state = transition.replay(TABLE2, [A.SHIFT, A.SHIFT, A.MERGE, A.SHIFT])
    assert get_action(state, TABLE2) is A.RIGHT_REMOVE


def test_get_action_left_relation_then_keep_aspect():
    # "Good service, but not so welcoming": the aspect pairs leftward with
    # "good" first; the opinion is then dropped so the aspect can pair
    # rightward with "not so welcoming" later.
    s = make_sentence(
        "fig1",
        ["Good", "service", ",", "but", "not", "so", "welcoming"],
        [([1], [0], "POS"), ([1], [4, 5, 6], "NEG")],
    )
    state = transition.replay(s, [A.SHIFT, A.SHIFT])
    assert get_action(state, s) is A.LEFT_RELATION
    res = derive(s)
    assert res.unreachable == ()
    assert {(r.pair, r.sentiment) for r in res.emitted} == {
        ((Span(1, 1), Span(0, 0)), Polarity.POS),
        ((Span(1, 1), Span(4, 6)), Polarity.NEG),
    }
    after_lr = transition.replay(s, res.actions[:3], [st.sentiment for st in res.steps[:3]])
    assert res.actions[2] is A.LEFT_RELATION
    assert res.actions[3] is A.LEFT_REMOVE
    assert get_action(after_lr, s, {(Span(1, 1), Span(0, 0))}) is A.LEFT_REMOVE


def test_derive_no_triplets_emits_nothing():
    s = make_sentence("plain", ["a", "b", "c", "d"], [])
    res = derive(s)
    assert res.emitted == ()
    assert res.unreachable == ()
    n = len(s)
    assert len(res.actions) == 2 * n - 1  # n shifts, n-2 removals, stop clears the rest
    assert res.actions[-1] is A.STOP
    assert all(st.sentiment is Polarity.NONE for st in res.steps)


def test_derive_replays_to_emitted_pairs():
    s = make_sentence(
        "multi",
        ["great", "pizza", "but", "slow", "service", "."],
        [([1], [0], "POS"), ([4], [3], "NEG")],
    )
    res = derive(s)
    final = transition.replay(s, res.actions, [st.sentiment for st in res.steps])
    assert {r.pair for r in final.relations} == {r.pair for r in res.emitted}
    assert res.unreachable == ()


def test_derive_is_deterministic():
    s = generate_synthetic(3, 10).sentences[5]
    r1, r2 = derive(s), derive(s)
    assert r1.actions == r2.actions
    assert r1.steps == r2.steps


def test_derive_sentiment_labels_only_at_relations():
    res = derive(TABLE2)
    for step in res.steps:
        if step.action in (A.LEFT_RELATION, A.RIGHT_RELATION):
            assert step.sentiment is not Polarity.NONE
        else:
            assert step.sentiment is Polarity.NONE


def test_derive_traces_satisfy_transition_invariants():
    corpus = generate_synthetic(11, 40)
    for s in corpus.sentences:
        res = derive(s)
        assert len(res.actions) <= transition.step_bound(len(s))
        state = transition.initial_state(len(s))
        for step in res.steps:
            assert step.action in transition.legal_actions(state)
            state = transition.apply(state, step.action, step.sentiment)
            assert state.stack == step.stack_after
            assert state.buffer == step.buffer_after
        assert transition.is_terminal(state)


def _all_two_pair_annotations(n):
    """Every way to lay out two disjoint single/double-token pairs on n tokens."""
    spans = [Span(i, j) for i in range(n) for j in (i, i + 1) if j < n]
    for a1, o1, a2, o2 in itertools.permutations(range(len(spans)), 4):
        quad = [spans[a1], spans[o1], spans[a2], spans[o2]]
        if any(x.overlaps(y) for x, y in itertools.combinations(quad, 2)):
            continue
        yield [(quad[0], quad[1], Polarity.POS), (quad[2], quad[3], Polarity.NEG)]


def test_unreachable_exists_and_soundness_holds_by_brute_force():
    """Search all disjoint 2-pair layouts on 5 tokens: emitted pairs are
    always gold (soundness), and some interleavings are unreachable."""
    surfaces = ["w0", "w1", "w2", "w3", "w4"]
    found_unreachable = False
    for i, annotation in enumerate(_all_two_pair_annotations(5)):
        s = make_sentence(
            f"bf{i}", surfaces, [(a, o, p) for a, o, p in annotation]
        )
        res = derive(s)
        gold_pairs = {t.pair for t in s.triplets}
        emitted_pairs = {r.pair for r in res.emitted}
        assert emitted_pairs <= gold_pairs, f"unsound emission on {annotation}"
        assert emitted_pairs | {t.pair for t in res.unreachable} == gold_pairs
        if res.unreachable:
            found_unreachable = True
    assert found_unreachable


def test_forced_discard_on_overlapping_entities():
    # Aspect [0] pairs with opinion [2,3]; aspect [1] pairs with opinion [3].
    # Once tokens 2 and 3 merge for the first pair, the second is gone: the
    # policy is eventually forced to discard a still-promising constituent.
    s = make_sentence(
        "forced", ["a", "b", "c", "d"], [([0], [2, 3], "POS"), ([1], [3], "NEG")]
    )
    res = derive(s)
    assert {r.pair for r in res.emitted} == {(Span(0, 0), Span(2, 3))}
    assert [t.pair for t in res.unreachable] == [(Span(1, 1), Span(3, 3))]


def test_coverage_full_recall_on_synthetic():
    corpus = generate_synthetic(7, 50)
    counts = coverage(corpus)
    assert counts.precision == 100.0
    assert counts.recall == 100.0
    assert counts.f1 == 100.0


def test_coverage_empty_conventions():
    empty = Corpus("none", "train", (make_sentence("e", ["just", "words"], []),))
    counts = coverage(empty)
    assert counts.predicted == 0 and counts.gold == 0
    assert counts.precision == 100.0
    assert counts.recall == 100.0


def test_coverage_counts_add_and_f1():
    c = CoverageCounts(predicted=4, gold=5, correct=4)
    assert c.precision == 100.0
    assert c.recall == 80.0
    assert abs(c.f1 - 2 * 100 * 80 / 180) < 1e-12
    total = c + CoverageCounts(1, 1, 1)
    assert (total.predicted, total.gold, total.correct) == (5, 6, 5)


def test_recall_100_on_non_crossing_single_partner_corpora():
    # Each entity has at most one partner per side and pairs never cross:
    # the policy must recover everything.
    cases = [
        make_sentence("c1", ["o1", "a1", "x", "a2", "o2"], [([1], [0], "POS"), ([3], [4], "NEG")]),
        make_sentence("c2", ["a", "x", "o"], [([0], [2], "POS")]),
        make_sentence("c3", ["o", "x", "a"], [([2], [0], "NEU")]),
        make_sentence("c4", ["o1", "a", "o2"], [([1], [0], "POS"), ([1], [2], "NEG")]),
        make_sentence(
            "c5",
            ["m1", "m2", "x", "p1", "p2"],
            [([0, 1], [3, 4], "POS")],
        ),
    ]
    for s in cases:
        res = derive(s)
        assert res.unreachable == (), s.id


def test_coverage_parallel_matches_sequential():
    corpus = generate_synthetic(3, 40)
    assert coverage(corpus, jobs=3) == coverage(corpus, jobs=1)


def test_conjunction_patterns_fully_recovered():
    # Shared entities with several partners on one side, the shape
    # coordination produces in real reviews.
    cases = [
        # two aspects share a trailing opinion
        make_sentence(
            "shared-opinion",
            ["the", "food", "and", "service", "were", "great"],
            [([1], [5], "POS"), ([3], [5], "POS")],
        ),
        # one aspect with two trailing opinions
        make_sentence(
            "two-right-opinions",
            ["food", "was", "great", "and", "cheap"],
            [([0], [2], "POS"), ([0], [4], "POS")],
        ),
        # one aspect with two leading opinions
        make_sentence(
            "two-left-opinions",
            ["great", "and", "cheap", "food"],
            [([3], [0], "POS"), ([3], [2], "POS")],
        ),
        # multi-token aspect shared by opinions on both sides
        make_sentence(
            "both-sides",
            ["great", "wine", "list", ",", "huge", "too"],
            [([1, 2], [0], "POS"), ([1, 2], [4], "POS")],
        ),
    ]
    for s in cases:
        res = derive(s)
        assert res.unreachable == (), (s.id, res.actions)
        assert {r.pair for r in res.emitted} == {t.pair for t in s.triplets}, s.id
