import pytest
from sklearn.base import clone

from shiftpair.core import PairRelation
from shiftpair.data import generate_synthetic
from shiftpair.estimator import TransitionTripletExtractor, as_sentences

SMALL = dict(
    token_dim=16, action_dim=8, distance_dim=4, hidden_dim=16, mlp_dim=8,
    epochs=60, learning_rate=0.02, seed=0, early_stop_accuracy=0.995,
)


@pytest.fixture(scope="module")
def fitted():
    corpus = generate_synthetic(7, 30)
    est = TransitionTripletExtractor(**SMALL)
    return est.fit(list(corpus.sentences)), corpus


def test_get_set_params_round_trip():
    est = TransitionTripletExtractor(epochs=5, learning_rate=0.5)
    params = est.get_params()
    assert params["epochs"] == 5
    est2 = TransitionTripletExtractor().set_params(**params)
    assert est2.get_params() == params


def test_clone_preserves_params():
    est = TransitionTripletExtractor(**SMALL)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_fit_returns_self_and_sets_state(fitted):
    est, corpus = fitted
    assert hasattr(est, "params_")
    assert est.history_
    assert est.n_features_in_ == len(corpus)


def test_predict_shapes_and_types(fitted):
    est, corpus = fitted
    predictions = est.predict(list(corpus.sentences[:5]))
    assert len(predictions) == 5
    for relations in predictions:
        assert all(isinstance(r, PairRelation) for r in relations)


def test_score_is_high_after_fit(fitted):
    est, corpus = fitted
    assert est.score(list(corpus.sentences)) >= 0.9


def test_predict_accepts_strings(fitted):
    est, _ = fitted
    predictions = est.predict(["great food", "the service was slow"])
    assert len(predictions) == 2


def test_predict_before_fit_raises():
    est = TransitionTripletExtractor()
    with pytest.raises(RuntimeError):
        est.predict(["hello there"])


def test_as_sentences_validation():
    sentences = as_sentences(["a b", ["c", "d"]])
    assert [s.surfaces for s in sentences] == [("a", "b"), ("c", "d")]
    with pytest.raises(TypeError):
        as_sentences([42])
