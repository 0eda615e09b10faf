import numpy as np
import pytest

from shiftpair.core import Action, make_sentence
from shiftpair.data import generate_synthetic
from shiftpair.errors import DimMismatchError, MissingVectorError
from shiftpair.scorer import (
    Dims,
    ScorerParams,
    TokenVectors,
    Vocabulary,
    action_distribution,
    embed_tokens,
    init_params,
    masked_softmax,
    prepare_state,
    sentiment_distribution,
    summarize,
)
from shiftpair.transition import initial_state, replay

DIMS = Dims(token=8, action=4, distance=4, hidden=6, mlp=5, max_distance=3)
A = Action

TABLE2 = make_sentence("t2", ["Gourmet", "food", "is", "delicious"], [([0, 1], [3], "POS")])


@pytest.fixture()
def params():
    corpus = generate_synthetic(1, 5)
    vocab = Vocabulary.build(corpus.sentences + (TABLE2,))
    return init_params(DIMS, vocab, seed=0)


def test_embed_lookup_shapes(params):
    X = embed_tokens(TABLE2, params)
    assert X.shape == (4, DIMS.token)


def test_embed_unknown_words_share_unk_row(params):
    odd = make_sentence("odd", ["zzzunseen", "wwwunseen"], [])
    X = embed_tokens(odd, params)
    assert np.allclose(X[0], X[1])
    assert np.allclose(X[0], params.arrays["tok_emb"][0])


def test_external_mode_dim_mismatch(params):
    vectors = TokenVectors(dim=16, rows={})
    external = init_params(DIMS, None, seed=0)
    with pytest.raises(DimMismatchError):
        embed_tokens(TABLE2, external, vectors)


def test_external_mode_missing_vector():
    external = init_params(DIMS, None, seed=0)
    vectors = TokenVectors(dim=DIMS.token, rows={})
    with pytest.raises(MissingVectorError):
        embed_tokens(TABLE2, external, vectors)
    with pytest.raises(MissingVectorError):
        embed_tokens(TABLE2, external, None)


def test_external_mode_same_pipeline_shapes(params):
    rng = np.random.default_rng(0)
    rows = {(TABLE2.id, i): rng.normal(size=DIMS.token) for i in range(4)}
    external = init_params(DIMS, None, seed=0)
    X = embed_tokens(TABLE2, external, TokenVectors(DIMS.token, rows))
    assert X.shape == embed_tokens(TABLE2, params).shape
    f_ext = summarize(initial_state(4), X, external)
    f_look = summarize(initial_state(4), embed_tokens(TABLE2, params), params)
    assert f_ext.vector.shape == f_look.vector.shape


def test_initial_state_summaries(params):
    X = embed_tokens(TABLE2, params)
    features = summarize(initial_state(4), X, params)
    assert np.all(features.stack_summary == 0.0)
    assert np.all(features.history_summary == 0.0)
    assert np.any(features.buffer_summary != 0.0)
    assert features.vector.shape == (DIMS.features,)


def test_distance_bucket_table2_row7(params):
    # Stack [gourmet-food, delicious]: distance = 3 - 1 = 2.
    state = replay(TABLE2, [A.SHIFT, A.SHIFT, A.MERGE, A.SHIFT, A.RIGHT_REMOVE, A.SHIFT])
    prepared = prepare_state(state, DIMS)
    assert prepared.distance_bucket == 2 + DIMS.max_distance


def test_distance_clamps(params):
    s = make_sentence("long", [f"w{i}" for i in range(12)], [])
    state = replay(
        s,
        [A.SHIFT] + [A.SHIFT, A.RIGHT_REMOVE] * 10 + [A.SHIFT],
    )
    assert state.stack[-1].span.start - state.stack[-2].span.end == 11
    prepared = prepare_state(state, DIMS)
    assert prepared.distance_bucket == 2 * DIMS.max_distance


def test_reserved_bucket_for_short_stack(params):
    prepared = prepare_state(initial_state(4), DIMS)
    assert prepared.distance_bucket == DIMS.max_distance


def test_equal_valued_buffer_tokens_permute_freely(params):
    # Two buffer positions holding the same surface embed identically, so
    # swapping them cannot change the summary.
    s1 = make_sentence("p1", ["food", "same", "same", "food"], [])
    X = embed_tokens(s1, params)
    assert np.allclose(X[1], X[2])
    f = summarize(initial_state(4), X, params)
    swapped = X[[0, 2, 1, 3]]
    g = summarize(initial_state(4), swapped, params)
    assert np.allclose(f.vector, g.vector)


def test_feature_dimension_stable_across_states(params):
    corpus = generate_synthetic(4, 6)
    dims_seen = set()
    for s in corpus.sentences:
        from shiftpair.oracle import derive
        from shiftpair.transition import apply

        X = embed_tokens(s, params)
        state = initial_state(len(s))
        for step in derive(s).steps:
            dims_seen.add(summarize(state, X, params).vector.shape)
            state = apply(state, step.action, step.sentiment)
    assert dims_seen == {(DIMS.features,)}


def test_action_distribution_symmetry_and_eq1(params):
    features = np.zeros(DIMS.features)
    work = params.copy()
    work.arrays["act_out_W"][:] = 0.0
    work.arrays["act_out_b"][:] = 0.0
    probs = action_distribution(features, [A.SHIFT, A.MERGE, A.STOP], work)
    legal = [int(A.SHIFT), int(A.MERGE), int(A.STOP)]
    assert np.allclose(probs[legal], 1 / 3)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    # logits {shift: ln 2, stop: 0} over legal {shift, stop} -> {2/3, 1/3}
    work.arrays["act_out_b"][int(A.SHIFT)] = np.log(2.0)
    probs = action_distribution(features, [A.SHIFT, A.STOP], work)
    assert probs[int(A.SHIFT)] == pytest.approx(2 / 3, abs=1e-12)
    assert probs[int(A.STOP)] == pytest.approx(1 / 3, abs=1e-12)


def test_action_distribution_single_legal(params):
    features = np.random.default_rng(0).normal(size=DIMS.features)
    probs = action_distribution(features, [A.SHIFT], params)
    assert probs[int(A.SHIFT)] == 1.0
    assert probs.sum() == 1.0


def test_masking_soundness(params):
    rng = np.random.default_rng(1)
    for _ in range(20):
        logits = rng.normal(size=7)
        mask = rng.random(7) < 0.5
        if not mask.any():
            mask[0] = True
        probs = masked_softmax(logits, mask)
        assert np.all(probs[~mask] == 0.0)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(probs[mask] > 0.0)


def test_sentiment_uniform_at_zero_weights(params):
    work = params.copy()
    work.arrays["sent_W1"][:] = 0.0
    work.arrays["sent_b1"][:] = 0.0
    work.arrays["sent_W2"][:] = 0.0
    work.arrays["sent_b2"][:] = 0.0
    probs = sentiment_distribution(np.ones(DIMS.features), work)
    assert np.allclose(probs, 0.25)


def test_sentiment_sums_to_one(params):
    rng = np.random.default_rng(2)
    for _ in range(10):
        probs = sentiment_distribution(rng.normal(size=DIMS.features), params)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert probs.shape == (4,)


def test_param_specs_have_exactly_seven_action_rows(params):
    assert params.arrays["act_emb"].shape[0] == 7
    assert params.arrays["act_out_W"].shape[0] == 7
    assert params.arrays["hist_W"].shape[1] == 7


def test_init_is_seed_deterministic():
    vocab = Vocabulary(("<unk>", "a", "b"))
    p1 = init_params(DIMS, vocab, seed=5)
    p2 = init_params(DIMS, vocab, seed=5)
    p3 = init_params(DIMS, vocab, seed=6)
    for name in p1.arrays:
        assert np.array_equal(p1.arrays[name], p2.arrays[name])
    assert any(not np.array_equal(p1.arrays[n], p3.arrays[n]) for n in p1.arrays)
    assert all(np.abs(a).max() <= 0.1 for a in p1.arrays.values())


def test_params_shape_validation():
    vocab = Vocabulary(("<unk>", "a"))
    good = init_params(DIMS, vocab, seed=0)
    bad = {k: v.copy() for k, v in good.arrays.items()}
    bad["act_emb"] = np.zeros((6, DIMS.action))
    with pytest.raises(DimMismatchError):
        ScorerParams(DIMS, vocab, bad)


def test_vocabulary_contract():
    vocab = Vocabulary(("<unk>", "alpha", "beta"))
    assert vocab.lookup("alpha") == 1
    assert vocab.lookup("missing") == 0
    assert len(vocab.digest()) == 64
    with pytest.raises(ValueError):
        Vocabulary(("alpha",))
